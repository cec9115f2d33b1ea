"""Solvability certificate and voltage disks."""
