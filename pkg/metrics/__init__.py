from metrics.aggregate import (
    MetricsReport,
    TrackReport,
    TrackSignals,
    aggregate,
    frame_bounds,
    frame_samples,
    median,
    summarize,
)
from metrics.degradation import Degradation, difference, di, ds, dsa
from metrics.ground import SIR_NOTE, GroundMetric, sdr, sir
from metrics.reports import report_table, write_report_csv, write_summary_json

__all__ = [
    "Degradation",
    "GroundMetric",
    "MetricsReport",
    "SIR_NOTE",
    "TrackReport",
    "TrackSignals",
    "aggregate",
    "di",
    "difference",
    "ds",
    "dsa",
    "frame_bounds",
    "frame_samples",
    "median",
    "report_table",
    "sdr",
    "sir",
    "summarize",
    "write_report_csv",
    "write_summary_json",
]
