"""Balancibility condition, tolerance search and scenario sweeps."""
