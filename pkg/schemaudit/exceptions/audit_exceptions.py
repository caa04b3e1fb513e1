"""Custom exceptions for the schemaudit package."""

class AuditException(Exception):
    """Base exception for schemaudit-specific errors."""
    pass

class ConfigurationError(AuditException):
    """Raised when there are configuration-related errors."""
    pass

class SchemaError(AuditException):
    """Raised when a schema file is malformed or structurally invalid."""
    pass

class TensorError(AuditException):
    """Raised when annotation rows cannot be turned into a response tensor."""
    pass

class NormalizationError(AuditException):
    """Raised when a normalization rule table is inconsistent."""
    pass

class ThresholdError(AuditException):
    """Raised when a vote threshold lies outside {0..A}."""
    pass

class EmptyCorpusError(AuditException):
    """Raised when a rate is requested over zero units or an empty distribution."""
    pass

class RobustnessError(AuditException):
    """Raised when a robustness analysis is asked for an impossible panel or ranking."""
    pass

class ValidationDataError(AuditException):
    """Raised when human validation labels are malformed or do not overlap the tensor."""
    pass

class PromptError(AuditException):
    """Raised when a prompt template or its inputs are invalid."""
    pass

class TransportError(AuditException):
    """Raised when a transport cannot answer a prompt."""
    pass

class InvariantViolation(AuditException):
    """Raised when an internal consistency check fails."""
    pass
