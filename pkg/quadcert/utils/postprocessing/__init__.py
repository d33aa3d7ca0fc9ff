"""Post-processing of run artifacts into summary tables."""

from .report import format_table, render_report, summarize_artifact, width_table

__all__ = [
    'format_table',
    'render_report',
    'summarize_artifact',
    'width_table',
]
