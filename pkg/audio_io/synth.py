"""Deterministic synthetic multi-source material.

Stands in for a real multitrack dataset: each source kind has a distinct
spectral footprint so separation and untargeted-source effects can be studied
at desk scale.
"""
import logging
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from audio_io.clip import AudioClip, SourceSet, mix_sources
from errors import ParameterError
from seeding import make_rng

logger = logging.getLogger(__name__)

SourceKind = Literal["vocals", "bass", "drums", "other"]


class SourceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    kind: SourceKind
    params: Dict[str, Any] = Field(default_factory=dict)


class SynthRecipe(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sources: List[SourceSpec]
    duration_s: float = 4.0
    sample_rate: int = 8000
    leading_silence_s: float = 0.0
    channels: int = 1


def _vocals(t: np.ndarray, rng: np.random.Generator, params: Dict[str, Any]) -> np.ndarray:
    """Harmonic chirp with vibrato and a syllable-like amplitude envelope."""
    f_start = float(params.get("f_start", 300.0)) * (1.0 + 0.05 * rng.uniform(-1, 1))
    f_end = float(params.get("f_end", 600.0)) * (1.0 + 0.05 * rng.uniform(-1, 1))
    harmonics = int(params.get("harmonics", 4))
    amplitude = float(params.get("amplitude", 0.3))
    vibrato_hz = float(params.get("vibrato_hz", 5.0))
    syllable_hz = float(params.get("syllable_hz", 2.0))

    duration = max(t[-1], 1e-9)
    f0 = f_start + (f_end - f_start) * t / duration
    f0 = f0 * (1.0 + 0.01 * np.sin(2 * np.pi * vibrato_hz * t))
    dt = t[1] - t[0] if len(t) > 1 else 1.0
    phase = 2 * np.pi * np.cumsum(f0) * dt + rng.uniform(0, 2 * np.pi)
    signal = sum(np.sin(k * phase) / k for k in range(1, harmonics + 1))
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * syllable_hz * t + rng.uniform(0, 2 * np.pi)) ** 2
    return amplitude * envelope * signal / np.sum(1.0 / np.arange(1, harmonics + 1))


def _bass(t: np.ndarray, rng: np.random.Generator, params: Dict[str, Any]) -> np.ndarray:
    """Low sine with a weak second harmonic."""
    freq = float(params.get("freq", 80.0)) * (1.0 + 0.05 * rng.uniform(-1, 1))
    amplitude = float(params.get("amplitude", 0.3))
    phase = rng.uniform(0, 2 * np.pi)
    return amplitude * (0.85 * np.sin(2 * np.pi * freq * t + phase) + 0.15 * np.sin(4 * np.pi * freq * t + phase))


def _smooth(noise: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return noise
    kernel = np.hanning(width + 2)[1:-1]
    return np.convolve(noise, kernel / kernel.sum(), mode="same")


def _drums(t: np.ndarray, rng: np.random.Generator, params: Dict[str, Any]) -> np.ndarray:
    """Decaying low-passed noise bursts on a fixed beat grid."""
    bpm = float(params.get("bpm", 120.0))
    decay_s = float(params.get("decay_s", 0.05))
    amplitude = float(params.get("amplitude", 0.3))
    smoothing = int(params.get("smoothing", 4))

    noise = _smooth(rng.standard_normal(len(t)), smoothing)
    noise /= max(np.max(np.abs(noise)), 1e-12)
    beat = 60.0 / bpm
    offset = rng.uniform(0, beat)
    since_hit = np.mod(t - offset, beat)
    since_hit[t < offset] = beat * 4
    envelope = np.exp(-since_hit / decay_s)
    envelope[since_hit > 6 * decay_s] = 0.0
    return amplitude * envelope * noise


def _other(t: np.ndarray, rng: np.random.Generator, params: Dict[str, Any]) -> np.ndarray:
    """Broadband noise with slow level changes."""
    amplitude = float(params.get("amplitude", 0.1))
    noise = rng.standard_normal(len(t))
    noise /= max(np.std(noise), 1e-12)
    level = 0.7 + 0.3 * np.sin(2 * np.pi * 0.5 * t + rng.uniform(0, 2 * np.pi))
    return amplitude * level * noise / 3.0


GENERATORS: Dict[str, Callable[[np.ndarray, np.random.Generator, Dict[str, Any]], np.ndarray]] = {
    "vocals": _vocals,
    "bass": _bass,
    "drums": _drums,
    "other": _other,
}


def synth_source_set(recipe: SynthRecipe, seed: int, track_id: Optional[str] = None) -> SourceSet:
    """Generate a SourceSet as a pure function of (recipe, seed)."""
    if recipe.duration_s <= 0:
        raise ParameterError(f"duration_s must be positive, got {recipe.duration_s}")
    if recipe.sample_rate <= 0:
        raise ParameterError(f"sample_rate must be positive, got {recipe.sample_rate}")
    if recipe.channels < 1:
        raise ParameterError(f"channels must be at least 1, got {recipe.channels}")
    if recipe.leading_silence_s < 0 or recipe.leading_silence_s >= recipe.duration_s:
        raise ParameterError(
            f"leading_silence_s must lie in [0, duration_s), got {recipe.leading_silence_s}"
        )
    if len(recipe.sources) < 2:
        raise ParameterError(f"A recipe needs at least two sources, got {len(recipe.sources)}")

    num_samples = int(round(recipe.duration_s * recipe.sample_rate))
    silent = int(round(recipe.leading_silence_s * recipe.sample_rate))
    t = np.arange(num_samples) / recipe.sample_rate

    named = []
    for index, spec in enumerate(recipe.sources):
        rng = make_rng(seed, "synth", index, spec.name, spec.kind)
        mono = GENERATORS[spec.kind](t, rng, spec.params)
        gains = 1.0 - 0.3 * rng.uniform(0, 1, size=recipe.channels) if recipe.channels > 1 else np.ones(1)
        samples = gains[:, np.newaxis] * mono[np.newaxis, :]
        samples[:, :silent] = 0.0
        named.append((spec.name, AudioClip(samples=samples, sample_rate=recipe.sample_rate)))

    source_set = mix_sources(named, track_id=track_id or f"synth-{seed}")
    logger.debug(f"Synthesized '{source_set.track_id}': {source_set.names}, {num_samples} samples")
    return source_set


def default_recipe(kinds=("vocals", "bass"), duration_s: float = 4.0, sample_rate: int = 8000,
                   leading_silence_s: float = 0.0, channels: int = 1) -> SynthRecipe:
    """Recipe with one source per kind, named after the kind."""
    return SynthRecipe(
        sources=[SourceSpec(name=kind, kind=kind) for kind in kinds],
        duration_s=duration_s,
        sample_rate=sample_rate,
        leading_silence_s=leading_silence_s,
        channels=channels,
    )
