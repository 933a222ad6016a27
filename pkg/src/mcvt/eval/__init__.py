"""Scoring and operational reports."""

from .ident import IdRow, IdScore, idf1_score
from .reports import (
    KdeReport,
    LatencyTrace,
    RealtimeReport,
    StageStats,
    format_kde_report,
    format_realtime_report,
    kde_report,
    realtime_report,
)

__all__ = [
    "IdRow",
    "IdScore",
    "KdeReport",
    "LatencyTrace",
    "RealtimeReport",
    "StageStats",
    "format_kde_report",
    "format_realtime_report",
    "idf1_score",
    "kde_report",
    "realtime_report",
]
