"""Fixed-point power flow in normalized coordinates."""
