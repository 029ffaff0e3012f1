"""Data loading module."""
from .loader import ConfigLoader, validate_config

__all__ = ['ConfigLoader', 'validate_config']
