"""Robust balance certification over voltage disks."""
