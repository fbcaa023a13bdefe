"""Griffin–Lim phase reconstruction from an STFT magnitude.

Starting from an initial phase, each iteration

1. reconstructs the time signal with :func:`istft_array`,
2. re-applies the STFT,
3. keeps the new phase and enforces the known magnitude.

The initial phase is either uniform random (deterministic per seed) or taken
from a complex array ``init_phase`` whose modulus is discarded.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from audio_io.clip import AudioClip
from dsp.stft import StftConfig, istft_array, spectral_energy, stft_array
from errors import ParameterError
from seeding import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GriffinLimResult:
    clip: AudioClip
    errors: Tuple[float, ...]


def _unit_phase(spec: np.ndarray) -> np.ndarray:
    modulus = np.abs(spec)
    phase = np.ones_like(spec, dtype=np.complex128)
    nonzero = modulus > 0
    phase[nonzero] = spec[nonzero] / modulus[nonzero]
    return phase


def spectral_convergence(spec: np.ndarray, magnitude: np.ndarray) -> float:
    """Relative distance between ``|spec|`` and a target magnitude.

    Measured over the full two-sided spectrum, so every Griffin–Lim iteration
    is guaranteed not to increase it.
    """
    reference = spectral_energy(magnitude)
    if reference == 0.0:
        return 0.0 if spectral_energy(spec) == 0.0 else float("inf")
    return float(np.sqrt(spectral_energy(np.abs(spec) - magnitude) / reference))


def _as_frames(magnitude: np.ndarray, cfg: StftConfig) -> np.ndarray:
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if magnitude.ndim == 2:
        magnitude = magnitude[np.newaxis]
    if magnitude.ndim != 3 or magnitude.shape[2] != cfg.bins:
        raise ParameterError(
            f"Magnitude must be [channels, frames, {cfg.bins}] or [frames, {cfg.bins}], got {magnitude.shape}"
        )
    if not np.all(np.isfinite(magnitude)):
        raise ParameterError("Magnitude contains NaN or Inf")
    if np.any(magnitude < 0):
        raise ParameterError("Magnitude must be non-negative")
    return magnitude


def griffin_lim_with_trace(
    magnitude: np.ndarray,
    cfg: StftConfig,
    iters: int,
    seed: int = 0,
    length: Optional[int] = None,
    sample_rate: int = 8000,
    init_phase: Optional[np.ndarray] = None,
) -> GriffinLimResult:
    """Run Griffin–Lim and record the spectral convergence of every iterate.

    Args:
        magnitude: non-negative ``[channels, frames, bins]`` (or one channel without the leading axis)
        cfg: analysis parameters the magnitude was computed with
        iters: number of iterations, at least 1
        seed: seeds the random initial phase when ``init_phase`` is None
        length: output length in samples; inferred from the frame count when omitted
        sample_rate: sample rate carried by the returned clip
        init_phase: complex array whose phase initializes the estimate

    Returns:
        GriffinLimResult with the reconstructed clip and one error per iteration.
    """
    if iters < 1:
        raise ParameterError(f"Griffin–Lim needs at least one iteration, got {iters}")
    magnitude = _as_frames(magnitude, cfg)
    if length is None:
        length = (magnitude.shape[1] - 1) * cfg.hop + cfg.n_fft - 2 * cfg.pad

    if init_phase is not None:
        init_phase = np.asarray(init_phase)
        if init_phase.shape != magnitude.shape:
            init_phase = init_phase.reshape(magnitude.shape)
        phase = _unit_phase(init_phase)
    else:
        rng = make_rng(seed, "griffin_lim")
        phase = np.exp(2j * np.pi * rng.uniform(size=magnitude.shape))

    signal = istft_array(magnitude * phase, cfg, length)
    spec = stft_array(signal, cfg)
    errors = []
    for _ in range(iters):
        signal = istft_array(magnitude * _unit_phase(spec), cfg, length)
        spec = stft_array(signal, cfg)
        errors.append(spectral_convergence(spec, magnitude))

    logger.debug(f"Griffin–Lim finished {iters} iterations, spectral convergence {errors[-1]:.3e}")
    return GriffinLimResult(clip=AudioClip(samples=signal, sample_rate=sample_rate), errors=tuple(errors))


def griffin_lim(
    magnitude: np.ndarray,
    cfg: StftConfig,
    iters: int,
    seed: int = 0,
    length: Optional[int] = None,
    sample_rate: int = 8000,
    init_phase: Optional[np.ndarray] = None,
) -> AudioClip:
    return griffin_lim_with_trace(magnitude, cfg, iters, seed, length, sample_rate, init_phase).clip
