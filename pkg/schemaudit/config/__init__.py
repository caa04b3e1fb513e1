"""Configuration handling for schemaudit."""

from .config_loader import ConfigLoader

__all__ = ['ConfigLoader']
