"""Utility modules for Balancibility."""

from .settings import Settings, SettingsException, get_settings, load_settings

__all__ = [
    'Settings',
    'SettingsException',
    'get_settings',
    'load_settings',
]
