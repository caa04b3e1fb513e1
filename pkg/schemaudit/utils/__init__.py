"""Utility modules for schemaudit."""

from .constants import DEFAULT_CONFIG, VERSION

__all__ = ['VERSION', 'DEFAULT_CONFIG']
