"""Transfer/white-box report rows, CSV and summary JSON."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from audio_io.clip import AudioClip
from dsp.export import export_spectrogram_csv
from dsp.stft import StftConfig, stft
from file_utils import atomic_write_text, create_output_directory
from metrics.aggregate import MetricsReport, median, summarize
from metrics.ground import SIR_NOTE
from metrics.reports import write_report_csv

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"

ROW_COLUMNS = [
    "condition", "source_label", "target_label", "track_id", "config_id", "method",
    "tuned_parameter", "tuned_value", "di_matched", "eta_checksum", "status", "error",
]


@dataclass(frozen=True)
class TransferRow:
    """One (clip, attack config, target model) evaluation.

    ``values`` maps quantity names such as ``DS_SDR``, ``DSA_SIR`` or ``DI``
    to dB values; failed rows carry an empty mapping.
    """

    condition: str
    source_label: str
    target_label: str
    track_id: str
    config_id: str
    method: str
    values: Dict[str, float] = field(default_factory=dict)
    tuned_parameter: Optional[str] = None
    tuned_value: Optional[float] = None
    di_matched: Optional[bool] = None
    eta_checksum: Optional[str] = None
    status: str = STATUS_OK
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.status == STATUS_FAILED

    def as_record(self) -> Dict[str, Any]:
        record = {column: getattr(self, column) for column in ROW_COLUMNS}
        record.update(self.values)
        return record


@dataclass(frozen=True)
class TransferReport:
    experiment: str
    rows: Tuple[TransferRow, ...] = ()
    metric_reports: Dict[Tuple[str, str], Tuple[MetricsReport, ...]] = field(default_factory=dict)

    @property
    def failed_rows(self) -> int:
        return sum(1 for row in self.rows if row.failed)

    @property
    def value_columns(self) -> List[str]:
        columns = []
        for row in self.rows:
            for name in row.values:
                if name not in columns:
                    columns.append(name)
        return columns

    def table(self) -> pd.DataFrame:
        return pd.DataFrame([row.as_record() for row in self.rows], columns=ROW_COLUMNS + self.value_columns)

    def medians_by_condition(self, quantity: str = "DS_SDR") -> Dict[str, float]:
        """Median of ``quantity`` over the successful rows of each condition."""
        grouped: Dict[str, List[float]] = {}
        for row in self.rows:
            if row.failed or quantity not in row.values or np.isnan(row.values[quantity]):
                continue
            grouped.setdefault(row.condition, []).append(row.values[quantity])
        return {condition: median(values) for condition, values in grouped.items()}

    def medians_by_target(self, quantity: str = "DS_SDR") -> Dict[str, float]:
        grouped: Dict[str, List[float]] = {}
        for row in self.rows:
            if row.failed or quantity not in row.values or np.isnan(row.values[quantity]):
                continue
            grouped.setdefault(row.target_label, []).append(row.values[quantity])
        return {label: median(values) for label, values in grouped.items()}

    def curve(self, metric: str = "SDR") -> pd.DataFrame:
        """(DI, DS) points per attack config for degradation-versus-noise plots."""
        table = self.table()
        ds_column = f"DS_{metric.upper()}"
        if table.empty or ds_column not in table.columns:
            return pd.DataFrame(columns=["target_label", "method", "config_id", "DI", ds_column])
        ok = table[table["status"] == STATUS_OK]
        curve = (
            ok.groupby(["target_label", "method", "config_id"], sort=False)[["DI", ds_column]]
            .median()
            .reset_index()
            .sort_values(["target_label", "method", "DI"], kind="mergesort")
        )
        return curve.reset_index(drop=True)

    def summary(self) -> Dict[str, Any]:
        quantities = [name for name in self.value_columns if name.startswith(("DS_", "DSA_")) or name == "DI"]
        return {
            "experiment": self.experiment,
            "rows": len(self.rows),
            "failed_rows": self.failed_rows,
            "medians_by_condition": {
                quantity: _json_safe(self.medians_by_condition(quantity)) for quantity in quantities
            },
            "medians_by_target": {quantity: _json_safe(self.medians_by_target(quantity)) for quantity in quantities},
            "aggregates": {
                f"{target}/{config}": summarize(reports) for (target, config), reports in self.metric_reports.items()
            },
            "note": SIR_NOTE,
        }


def _json_safe(values: Dict[str, float]) -> Dict[str, Any]:
    safe = {}
    for key, value in values.items():
        if np.isnan(value):
            safe[key] = None
        elif np.isinf(value):
            safe[key] = "inf" if value > 0 else "-inf"
        else:
            safe[key] = float(value)
    return safe


def write_transfer_report(report: TransferReport, output_dir, stem: str = "transfer") -> Dict[str, Path]:
    """Write ``<stem>_report.csv``, ``<stem>_summary.json`` and the frame-level metric CSV."""
    out = create_output_directory(output_dir)
    written = {
        "csv": atomic_write_text(out / f"{stem}_report.csv", report.table().to_csv(index=False, float_format="%.10g")),
        "summary": atomic_write_text(
            out / f"{stem}_summary.json", json.dumps(report.summary(), indent=2, sort_keys=True)
        ),
    }
    for (target, config_id), reports in report.metric_reports.items():
        if reports:
            written[f"frames:{target}/{config_id}"] = write_report_csv(
                reports, create_output_directory(out / "frames") / f"{target}__{config_id}.csv"
            )
    logger.info(f"Wrote {len(report.rows)} report rows ({report.failed_rows} failed) to {out}")
    return written


def empty_report(experiment: str) -> TransferReport:
    return TransferReport(experiment=experiment)


def merge_rows(rows: Sequence[TransferRow]) -> Tuple[TransferRow, ...]:
    """Deterministic order: clip id, config id, target label."""
    return tuple(sorted(rows, key=lambda row: (row.track_id, row.config_id, row.target_label)))


PANEL_STEMS = ("input", "clean_separation", "eta", "adversarial_separation")


def export_example_panels(
    directory,
    mixture: AudioClip,
    clean_estimate: AudioClip,
    eta: AudioClip,
    adversarial_estimate: AudioClip,
    stft_cfg: StftConfig,
) -> List[Path]:
    """dB spectrogram grids of the input, the clean separation, eta and the adversarial separation."""
    written = []
    for stem, clip in zip(PANEL_STEMS, (mixture, clean_estimate, eta, adversarial_estimate)):
        written.extend(export_spectrogram_csv(stft(clip, stft_cfg), directory, stem))
    return written
