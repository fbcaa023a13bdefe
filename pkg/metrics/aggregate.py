"""Frame-wise evaluation and median-of-medians aggregation.

Each track is cut into frames, the requested quantity is evaluated per frame,
the per-track median is taken over the defined frames, and the global value
is the median of the track medians. Frames whose metric is undefined are
skipped and counted; a track without any defined frame is excluded.

Degradations can be aggregated in two orders. With ``difference_then_aggregate``
the DS/DSA value of every frame is aggregated directly. With
``aggregate_then_difference`` the two ground metrics are aggregated separately
and their medians are differenced; the two ground reports are kept in
``components``.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from audio_io.clip import AudioClip, SourceSet, require_same_layout
from errors import ParameterError, UndefinedMetricError
from metrics.degradation import SATURATED, UNDEFINED, difference
from metrics.ground import GroundMetric, energy_ratio_db, ground_value

logger = logging.getLogger(__name__)

Quantity = Literal["value", "DS", "DI", "DSA"]
AggregationOrder = Literal["aggregate_then_difference", "difference_then_aggregate"]

DEFAULT_FRAME_SECONDS = 1.0


@dataclass(frozen=True)
class TrackSignals:
    """Signals of one track needed to evaluate every quantity.

    ``reference`` is the true target source y, ``estimate`` the separation of
    the adversarial input and ``clean_estimate`` the separation of the clean
    input; ``mixture`` is x and ``eta`` the perturbation.
    """

    track_id: str
    reference: AudioClip
    estimate: Optional[AudioClip] = None
    clean_estimate: Optional[AudioClip] = None
    mixture: Optional[AudioClip] = None
    eta: Optional[AudioClip] = None
    sources: Optional[SourceSet] = None
    target_index: int = 0

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ParameterError(f"Track '{self.track_id}' is missing {missing}")
        require_same_layout(*[getattr(self, name) for name in names])


@dataclass(frozen=True)
class TrackReport:
    track_id: str
    frame_values: Tuple[float, ...]
    track_median: float
    skipped_frames: int = 0
    saturated_frames: int = 0


@dataclass(frozen=True)
class MetricsReport:
    quantity: str
    metric: GroundMetric
    per_track: Tuple[TrackReport, ...]
    global_median: float
    order: str = "difference_then_aggregate"
    excluded_tracks: Tuple[str, ...] = ()
    components: Tuple["MetricsReport", ...] = field(default_factory=tuple)

    @property
    def skipped_frames(self) -> int:
        return sum(track.skipped_frames for track in self.per_track)

    def track_medians(self) -> Dict[str, float]:
        return {track.track_id: track.track_median for track in self.per_track}


def median(values: Sequence[float]) -> float:
    """Exact median; an even count gives the mean of the central pair."""
    if len(values) == 0:
        raise UndefinedMetricError("Median of an empty set")
    return float(np.median(np.asarray(values, dtype=np.float64)))


def frame_bounds(num_samples: int, frame_length: int, hop: int) -> List[Tuple[int, int]]:
    """Full frames only; a clip shorter than one frame is a single frame."""
    if frame_length < 1 or hop < 1:
        raise ParameterError(f"frame_length and hop must be positive, got {frame_length}, {hop}")
    if num_samples <= frame_length:
        return [(0, num_samples)]
    return [(start, start + frame_length) for start in range(0, num_samples - frame_length + 1, hop)]


def _frame_evaluator(signals: TrackSignals, quantity: str, metric: GroundMetric, which: str) -> Callable:
    """Return f(start, stop) -> (value, flag) for one track and quantity.

    ``which`` selects the side of a degradation: "both" for the frame-wise
    difference, "clean" or "adversarial" for one ground metric.
    """
    stacked = None
    if metric.kind == "sir":
        if signals.sources is None:
            raise ParameterError(f"Track '{signals.track_id}' needs sources for SIR")
        stacked = np.stack([clip.samples for clip in signals.sources.clips])

    def ground(reference, estimate, start, stop):
        frame_sources = stacked[:, :, start:stop] if stacked is not None else None
        return ground_value(metric, reference[:, start:stop], estimate[:, start:stop], frame_sources, signals.target_index)

    y = signals.reference.samples
    if quantity == "value":
        signals.require("reference", "estimate")
        return lambda start, stop: (ground(y, signals.estimate.samples, start, stop), None)

    if quantity == "DI":
        signals.require("mixture", "eta")
        x, eta = signals.mixture.samples, signals.eta.samples
        return lambda start, stop: (
            energy_ratio_db(float(np.sum(x[:, start:stop] ** 2)), float(np.sum(eta[:, start:stop] ** 2)), "DI"),
            None,
        )

    if quantity == "DS":
        signals.require("reference", "clean_estimate", "estimate")
        clean, adversarial = signals.clean_estimate.samples, signals.estimate.samples
    elif quantity == "DSA":
        signals.require("reference", "clean_estimate", "eta")
        clean = signals.clean_estimate.samples
        adversarial = clean + signals.eta.samples
    else:
        raise ParameterError(f"Unknown quantity '{quantity}'")

    if which == "clean":
        return lambda start, stop: (ground(y, clean, start, stop), None)
    if which == "adversarial":
        return lambda start, stop: (ground(y, adversarial, start, stop), None)

    def both(start, stop):
        degradation = difference(ground(y, clean, start, stop), ground(y, adversarial, start, stop))
        return degradation.value, degradation.flag

    return both


def _track_report(signals: TrackSignals, evaluate: Callable, frame_length: int, hop: int) -> Optional[TrackReport]:
    values, skipped, saturated = [], 0, 0
    for start, stop in frame_bounds(signals.reference.num_samples, frame_length, hop):
        try:
            value, flag = evaluate(start, stop)
        except UndefinedMetricError:
            skipped += 1
            continue
        if flag == UNDEFINED or np.isnan(value):
            skipped += 1
            continue
        if flag == SATURATED or np.isinf(value):
            saturated += 1
        values.append(value)
    if not values:
        return None
    track_median = median(values)
    if np.isnan(track_median):
        return None
    return TrackReport(signals.track_id, tuple(values), track_median, skipped, saturated)


def _aggregate_frames(
    tracks: Sequence[TrackSignals], quantity: str, metric: GroundMetric, frame_length: int, hop: int, which: str, label: str
) -> MetricsReport:
    per_track, excluded = [], []
    for signals in tracks:
        report = _track_report(signals, _frame_evaluator(signals, quantity, metric, which), frame_length, hop)
        if report is None:
            logger.warning(f"Track '{signals.track_id}' has no defined {label} frames; excluded")
            excluded.append(signals.track_id)
            continue
        if report.skipped_frames:
            logger.debug(f"Track '{signals.track_id}': skipped {report.skipped_frames} undefined {label} frames")
        per_track.append(report)
    if not per_track:
        raise UndefinedMetricError(f"{label} is undefined on every track")
    return MetricsReport(
        quantity=label,
        metric=metric,
        per_track=tuple(per_track),
        global_median=median([track.track_median for track in per_track]),
        order="difference_then_aggregate",
        excluded_tracks=tuple(excluded),
    )


def aggregate(
    frame_length: int,
    hop: int,
    per_track_signals: Sequence[TrackSignals],
    metric: GroundMetric,
    quantity: Quantity = "value",
    order: AggregationOrder = "aggregate_then_difference",
) -> MetricsReport:
    """Frame-wise metric per track, then per-track median, then median over tracks."""
    if not per_track_signals:
        raise ParameterError("aggregate needs at least one track")
    if quantity in ("value", "DI") or order == "difference_then_aggregate":
        return _aggregate_frames(per_track_signals, quantity, metric, frame_length, hop, "both", quantity)

    clean = _aggregate_frames(per_track_signals, quantity, metric, frame_length, hop, "clean", f"{quantity}.clean")
    adversarial = _aggregate_frames(
        per_track_signals, quantity, metric, frame_length, hop, "adversarial", f"{quantity}.adversarial"
    )
    adversarial_medians = adversarial.track_medians()
    per_track, excluded = [], list(clean.excluded_tracks)
    for track in clean.per_track:
        if track.track_id not in adversarial_medians:
            excluded.append(track.track_id)
            continue
        degradation = difference(track.track_median, adversarial_medians[track.track_id])
        if not degradation.defined:
            excluded.append(track.track_id)
            continue
        per_track.append(TrackReport(track.track_id, (), degradation.value))
    overall = difference(clean.global_median, adversarial.global_median)
    if not overall.defined:
        raise UndefinedMetricError(f"{quantity} is undefined: both aggregated ground metrics saturate")
    return MetricsReport(
        quantity=quantity,
        metric=metric,
        per_track=tuple(per_track),
        global_median=overall.value,
        order="aggregate_then_difference",
        excluded_tracks=tuple(sorted(set(excluded))),
        components=(clean, adversarial),
    )


def frame_samples(sample_rate: int, seconds: float = DEFAULT_FRAME_SECONDS) -> int:
    return max(1, int(round(seconds * sample_rate)))


def summarize(reports: Sequence[MetricsReport]) -> Dict[str, Dict[str, object]]:
    """``{"<quantity>_<metric>": {"global_median", "track_medians", ...}}`` for JSON output."""
    summary = {}
    for report in reports:
        summary[f"{report.quantity}_{report.metric.kind.upper()}"] = {
            "global_median": _json_float(report.global_median),
            "track_medians": {k: _json_float(v) for k, v in report.track_medians().items()},
            "order": report.order,
            "skipped_frames": report.skipped_frames,
            "excluded_tracks": list(report.excluded_tracks),
        }
    return summary


def _json_float(value: float):
    if np.isnan(value):
        return None
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(value)
