"""Report assembly and SVG rendering."""

from .report_builder import AuditOptions, AuditReport, ReportBuilder
from .svg import SvgCanvas, render_heatmap, render_stability_landscape

__all__ = [
    'AuditOptions', 'AuditReport', 'ReportBuilder', 'SvgCanvas',
    'render_heatmap', 'render_stability_landscape',
]
