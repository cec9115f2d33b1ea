"""Voltage unbalance metrics and their quadratic and linear forms."""
