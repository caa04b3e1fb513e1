"""CLI modules for schemaudit."""

from .parser import build_parser, parse_arguments

__all__ = ['build_parser', 'parse_arguments']
