"""Exceptions for schemaudit."""

from .audit_exceptions import (
    AuditException, ConfigurationError, SchemaError, TensorError,
    NormalizationError, ThresholdError, EmptyCorpusError, RobustnessError,
    ValidationDataError, PromptError, TransportError, InvariantViolation,
)

__all__ = [
    'AuditException', 'ConfigurationError', 'SchemaError', 'TensorError',
    'NormalizationError', 'ThresholdError', 'EmptyCorpusError', 'RobustnessError',
    'ValidationDataError', 'PromptError', 'TransportError', 'InvariantViolation',
]
