"""schemaudit - diagnostics for annotation schemas from multi-annotator judgments."""

from .core.audit_app import AuditApp
from .core.schema import Schema, SchemaLoader
from .core.tensor import ResponseTensor, TensorBuilder
from .report.report_builder import AuditOptions, ReportBuilder
from .utils.constants import VERSION

__version__ = VERSION
__all__ = ['AuditApp', 'AuditOptions', 'ReportBuilder', 'ResponseTensor', 'Schema', 'SchemaLoader',
           'TensorBuilder', 'VERSION']
