"""Ground metrics: SDR and a scalar-projection SIR.

Both return +inf when the distortion (or interference) term is exactly zero
and -inf when the signal term is zero but the distortion is not. When both
terms vanish the metric is undefined.
"""
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from audio_io.clip import AudioClip, SourceSet, require_same_layout
from errors import ParameterError, UndefinedMetricError

SIR_NOTE = (
    "SIR uses a scalar least-squares projection onto the reference sources "
    "(no distortion filters); values are not comparable to filter-based BSS Eval SIR."
)


class GroundMetric(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["sdr", "sir"] = "sdr"

    def __str__(self) -> str:
        return self.kind


def energy_ratio_db(signal_energy: float, noise_energy: float, what: str) -> float:
    if noise_energy == 0.0:
        if signal_energy == 0.0:
            raise UndefinedMetricError(f"{what} is undefined: both signal and distortion are zero")
        return float("inf")
    if signal_energy == 0.0:
        return float("-inf")
    return float(10.0 * np.log10(signal_energy / noise_energy))


def sdr_array(reference: np.ndarray, estimate: np.ndarray) -> float:
    return energy_ratio_db(float(np.sum(reference ** 2)), float(np.sum((reference - estimate) ** 2)), "SDR")


def sdr(reference: AudioClip, estimate: AudioClip) -> float:
    """10 log10(||reference||^2 / ||reference - estimate||^2)."""
    require_same_layout(reference, estimate)
    return sdr_array(reference.samples, estimate.samples)


def sir_array(sources: np.ndarray, target_index: int, estimate: np.ndarray) -> float:
    """SIR of ``estimate`` for ``sources[target_index]``; ``sources`` is ``[num_sources, ...]``."""
    basis = sources.reshape(len(sources), -1)
    flat = estimate.ravel()
    if np.linalg.matrix_rank(basis) < len(basis):
        raise UndefinedMetricError("SIR is undefined: reference sources are zero or linearly dependent")
    target = basis[target_index]
    s_target = (flat @ target) / (target @ target) * target
    coefficients = np.linalg.solve(basis @ basis.T, basis @ flat)
    e_interf = coefficients @ basis - s_target
    return energy_ratio_db(float(s_target @ s_target), float(e_interf @ e_interf), "SIR")


def sir(sources: SourceSet, target_index: int, estimate: AudioClip) -> float:
    """Signal-to-interference ratio from least-squares projections.

    s_target is the projection of the estimate onto the target source and
    e_interf the remaining part of its projection onto the span of all sources.
    """
    if len(sources) < 2:
        raise ParameterError(f"SIR needs at least two sources, got {len(sources)}")
    if not 0 <= target_index < len(sources):
        raise ParameterError(f"target_index {target_index} outside [0, {len(sources)})")
    require_same_layout(sources.mixture, estimate)
    stacked = np.stack([clip.samples for clip in sources.clips])
    return sir_array(stacked, target_index, estimate.samples)


def ground_value(
    metric: GroundMetric,
    reference: np.ndarray,
    estimate: np.ndarray,
    sources: Optional[np.ndarray] = None,
    target_index: int = 0,
) -> float:
    """Evaluate a ground metric on raw arrays (used for frame-wise evaluation)."""
    if metric.kind == "sdr":
        return sdr_array(reference, estimate)
    if sources is None:
        raise ParameterError("SIR needs the reference sources")
    return sir_array(sources, target_index, estimate)
