"""Balancibility - Certify solvable and voltage-balanced three-phase power flow under load uncertainty."""

__version__ = "0.1.0"
