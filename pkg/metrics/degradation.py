"""Degradation metrics DS, DI and DSA.

DS and DSA are differences of ground metrics and may involve the ±inf
sentinels; :func:`difference` keeps the arithmetic explicit through flags.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from audio_io.clip import AudioClip, SourceSet, require_same_layout
from errors import ParameterError
from metrics.ground import GroundMetric, energy_ratio_db, ground_value

SATURATED = "saturated"
UNDEFINED = "undefined"


@dataclass(frozen=True)
class Degradation:
    value: float
    flag: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.flag != UNDEFINED

    def __float__(self) -> float:
        return self.value


def difference(minuend: float, subtrahend: float) -> Degradation:
    if np.isfinite(minuend) and np.isfinite(subtrahend):
        return Degradation(minuend - subtrahend)
    if np.isinf(minuend) and np.isinf(subtrahend) and np.sign(minuend) == np.sign(subtrahend):
        return Degradation(float("nan"), UNDEFINED)
    if np.isnan(minuend) or np.isnan(subtrahend):
        return Degradation(float("nan"), UNDEFINED)
    return Degradation(minuend - subtrahend, SATURATED)


def _stack(sources: Optional[SourceSet]):
    if sources is None:
        return None
    return np.stack([clip.samples for clip in sources.clips])


def ds(
    metric: GroundMetric,
    y: AudioClip,
    sep_clean: AudioClip,
    sep_adv: AudioClip,
    sources: Optional[SourceSet] = None,
    target_index: int = 0,
) -> Degradation:
    """Degradation of separation: M(y, f(x)) - M(y, f(x + eta))."""
    require_same_layout(y, sep_clean, sep_adv)
    if metric.kind == "sir" and sources is None:
        raise ParameterError("DS with SIR needs the reference sources")
    stacked = _stack(sources)
    clean = ground_value(metric, y.samples, sep_clean.samples, stacked, target_index)
    adversarial = ground_value(metric, y.samples, sep_adv.samples, stacked, target_index)
    return difference(clean, adversarial)


def di(x: AudioClip, eta: AudioClip) -> float:
    """Degradation of input SDR(x, x + eta), in closed form 10 log10(||x||^2 / ||eta||^2)."""
    require_same_layout(x, eta)
    return energy_ratio_db(float(np.sum(x.samples ** 2)), float(np.sum(eta.samples ** 2)), "DI")


def dsa(
    y: AudioClip,
    sep_clean: AudioClip,
    eta: AudioClip,
    metric: GroundMetric = GroundMetric(kind="sdr"),
    sources: Optional[SourceSet] = None,
    target_index: int = 0,
) -> Degradation:
    """Degradation with additive noise: M(y, f(x)) - M(y, f(x) + eta)."""
    require_same_layout(y, sep_clean, eta)
    return ds(metric, y, sep_clean, sep_clean.with_samples(sep_clean.samples + eta.samples), sources, target_index)
