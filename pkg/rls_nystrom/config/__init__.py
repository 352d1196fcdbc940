"""
Configuration handling for the RLS-Nystrom toolkit.
"""

from rls_nystrom.config.config import Config, get_config
from rls_nystrom.config.settings import Settings, get_settings

__all__ = [
    'Config',
    'get_config',
    'Settings',
    'get_settings'
]
