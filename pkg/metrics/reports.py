import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from file_utils import atomic_write_text
from metrics.aggregate import MetricsReport, summarize
from metrics.ground import SIR_NOTE

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["quantity", "metric", "track_id", "frame_index", "value_db", "flags"]
GLOBAL_TRACK = "__global__"


def _flags(value: float, extra: str = "") -> str:
    flags = [extra] if extra else []
    if np.isinf(value):
        flags.append("saturated")
    return ";".join(flags)


def _rows(report: MetricsReport) -> List[Dict[str, Any]]:
    metric = report.metric.kind.upper()
    rows = []
    for track in report.per_track:
        for index, value in enumerate(track.frame_values):
            rows.append({
                "quantity": report.quantity, "metric": metric, "track_id": track.track_id,
                "frame_index": index, "value_db": value, "flags": _flags(value),
            })
        rows.append({
            "quantity": report.quantity, "metric": metric, "track_id": track.track_id,
            "frame_index": None, "value_db": track.track_median,
            "flags": _flags(track.track_median, f"track_median;skipped={track.skipped_frames}"),
        })
    for track_id in report.excluded_tracks:
        rows.append({
            "quantity": report.quantity, "metric": metric, "track_id": track_id,
            "frame_index": None, "value_db": None, "flags": "excluded",
        })
    rows.append({
        "quantity": report.quantity, "metric": metric, "track_id": GLOBAL_TRACK,
        "frame_index": None, "value_db": report.global_median, "flags": _flags(report.global_median, "global_median"),
    })
    for component in report.components:
        rows.extend(_rows(component))
    return rows


def report_table(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    rows = [row for report in reports for row in _rows(report)]
    table = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    table["frame_index"] = table["frame_index"].astype("Int64")
    return table


def write_report_csv(reports: Sequence[MetricsReport], path) -> Path:
    path = atomic_write_text(path, report_table(reports).to_csv(index=False, float_format="%.10g"))
    logger.info(f"Wrote metrics report to {path}")
    return path


def write_summary_json(reports: Sequence[MetricsReport], path, extra: Optional[Dict[str, Any]] = None) -> Path:
    document: Dict[str, Any] = {"note": SIR_NOTE, "metrics": summarize(reports)}
    if extra:
        document.update(extra)
    path = atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True))
    logger.info(f"Wrote metrics summary to {path}")
    return path
