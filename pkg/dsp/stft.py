"""Short-time Fourier transform with exact adjoints.

All maps here are real-linear. Inner products on complex spectrogram entries are
taken as ``Re(a) * Re(b) + Im(a) * Im(b)`` summed over the one-sided spectrum,
which makes :func:`stft_adjoint` the transpose of :func:`stft` and
:func:`istft_adjoint` the transpose of :func:`istft`.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, model_validator

from audio_io.clip import AudioClip
from errors import ParameterError

# overlap-added squared window below this is treated as uncovered
WINDOW_SUM_FLOOR = 1e-10


class StftConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_fft: int = 512
    hop: int = 128
    window: Literal["hann"] = "hann"
    center: bool = True

    @model_validator(mode="after")
    def _check(self):
        if self.n_fft < 2 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two >= 2, got {self.n_fft}")
        if self.hop < 1 or self.hop >= self.n_fft or self.n_fft % self.hop:
            raise ValueError(f"hop must divide n_fft and be smaller than it, got hop={self.hop}, n_fft={self.n_fft}")
        return self

    @property
    def bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def pad(self) -> int:
        return self.n_fft // 2 if self.center else 0

    def num_frames(self, length: int) -> int:
        padded = length + 2 * self.pad
        if length < 1 or padded < self.n_fft:
            raise ParameterError(
                f"Signal of {length} samples is too short for n_fft={self.n_fft} (center={self.center})"
            )
        return 1 + -(-(padded - self.n_fft) // self.hop)

    def padded_length(self, num_frames: int) -> int:
        return (num_frames - 1) * self.hop + self.n_fft


@lru_cache(maxsize=32)
def hann_window(n_fft: int) -> np.ndarray:
    """Periodic Hann window; satisfies constant overlap-add for every hop dividing n_fft."""
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)
    window.setflags(write=False)
    return window


@lru_cache(maxsize=64)
def window_sum(n_fft: int, hop: int, num_frames: int) -> np.ndarray:
    """Overlap-added squared window over the padded signal."""
    squared = hann_window(n_fft) ** 2
    total = np.zeros((num_frames - 1) * hop + n_fft)
    for f in range(num_frames):
        total[f * hop:f * hop + n_fft] += squared
    total.setflags(write=False)
    return total


@dataclass(frozen=True)
class Spectrogram:
    """One-sided complex STFT frames, ``[channels, frames, bins]``."""

    frames: np.ndarray
    config: StftConfig
    origin_length: int
    sample_rate: int = 8000

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        if frames.ndim != 3:
            raise ParameterError(f"Spectrogram frames must be [channels, frames, bins], got {frames.shape}")
        if frames.shape[2] != self.config.bins:
            raise ParameterError(f"Expected {self.config.bins} bins, got {frames.shape[2]}")
        if frames.shape[1] != self.config.num_frames(self.origin_length):
            raise ParameterError(
                f"{frames.shape[1]} frames do not match origin length {self.origin_length} "
                f"(expected {self.config.num_frames(self.origin_length)})"
            )
        if not np.all(np.isfinite(frames)):
            raise ParameterError("Spectrogram contains NaN or Inf")
        object.__setattr__(self, "frames", frames)

    @property
    def channels(self) -> int:
        return self.frames.shape[0]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)


def _frame(padded: np.ndarray, cfg: StftConfig) -> np.ndarray:
    return sliding_window_view(padded, cfg.n_fft, axis=-1)[:, ::cfg.hop, :]


def _overlap_add(segments: np.ndarray, cfg: StftConfig) -> np.ndarray:
    channels, num_frames, _ = segments.shape
    out = np.zeros((channels, cfg.padded_length(num_frames)))
    for f in range(num_frames):
        out[:, f * cfg.hop:f * cfg.hop + cfg.n_fft] += segments[:, f, :]
    return out


def _check_frames(frames: np.ndarray, cfg: StftConfig, length: int) -> int:
    expected = cfg.num_frames(length)
    if frames.ndim != 3 or frames.shape[1] != expected or frames.shape[2] != cfg.bins:
        raise ParameterError(
            f"Frames of shape {frames.shape} do not fit length {length} "
            f"(expected [*, {expected}, {cfg.bins}])"
        )
    return expected


def stft_array(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """STFT of ``[channels, length]`` real samples."""
    channels, length = samples.shape
    num_frames = cfg.num_frames(length)
    padded = np.zeros((channels, cfg.padded_length(num_frames)), dtype=samples.dtype)
    padded[:, cfg.pad:cfg.pad + length] = samples
    return np.fft.rfft(_frame(padded, cfg) * hann_window(cfg.n_fft), axis=-1)


def istft_array(frames: np.ndarray, cfg: StftConfig, length: int) -> np.ndarray:
    """Weighted overlap-add inverse, truncated to ``length`` samples."""
    num_frames = _check_frames(frames, cfg, length)
    segments = np.fft.irfft(frames, n=cfg.n_fft, axis=-1) * hann_window(cfg.n_fft)
    out = _overlap_add(segments, cfg)
    wsum = window_sum(cfg.n_fft, cfg.hop, num_frames)
    covered = wsum > WINDOW_SUM_FLOOR
    out[:, covered] /= wsum[covered]
    out[:, ~covered] = 0.0
    return out[:, cfg.pad:cfg.pad + length]


def stft_adjoint_array(cotangent: np.ndarray, cfg: StftConfig, length: int) -> np.ndarray:
    """Transpose of :func:`stft_array` for the real inner product."""
    _check_frames(cotangent, cfg, length)
    # interior bins stand for a conjugate pair in the full spectrum
    scaled = np.array(cotangent, dtype=np.complex128)
    scaled[..., 1:-1] *= 0.5
    segments = cfg.n_fft * np.fft.irfft(scaled, n=cfg.n_fft, axis=-1) * hann_window(cfg.n_fft)
    return _overlap_add(segments, cfg)[:, cfg.pad:cfg.pad + length]


def istft_adjoint_array(cotangent: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Transpose of :func:`istft_array`: time-domain cotangent to frame cotangent."""
    channels, length = cotangent.shape
    num_frames = cfg.num_frames(length)
    wsum = window_sum(cfg.n_fft, cfg.hop, num_frames)
    padded = np.zeros((channels, cfg.padded_length(num_frames)))
    padded[:, cfg.pad:cfg.pad + length] = cotangent
    covered = wsum > WINDOW_SUM_FLOOR
    padded[:, covered] /= wsum[covered]
    padded[:, ~covered] = 0.0
    frames = np.fft.rfft(_frame(padded, cfg) * hann_window(cfg.n_fft), axis=-1) / cfg.n_fft
    frames[..., 1:-1] *= 2.0
    return frames


def stft(clip: AudioClip, cfg: StftConfig) -> Spectrogram:
    return Spectrogram(
        frames=stft_array(clip.samples, cfg),
        config=cfg,
        origin_length=clip.num_samples,
        sample_rate=clip.sample_rate,
    )


def istft(spec: Spectrogram, cfg: StftConfig) -> AudioClip:
    if cfg != spec.config:
        raise ParameterError(f"STFT config mismatch: spectrogram built with {spec.config}, got {cfg}")
    return AudioClip(samples=istft_array(spec.frames, cfg, spec.origin_length), sample_rate=spec.sample_rate)


def stft_adjoint(cotangent: Spectrogram, cfg: StftConfig, length: int) -> AudioClip:
    if cfg != cotangent.config:
        raise ParameterError(f"STFT config mismatch: cotangent built with {cotangent.config}, got {cfg}")
    return AudioClip(
        samples=stft_adjoint_array(cotangent.frames, cfg, length),
        sample_rate=cotangent.sample_rate,
    )


def spectral_energy(frames: np.ndarray) -> float:
    """Energy of the full two-sided spectrum described by one-sided frames."""
    power = np.abs(frames) ** 2
    return float(power[..., 0].sum() + power[..., -1].sum() + 2.0 * power[..., 1:-1].sum())


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product of complex arrays: sum of Re*Re + Im*Im."""
    return float(np.sum(a.real * b.real) + np.sum(a.imag * b.imag))
