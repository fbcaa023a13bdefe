from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from errors import ParameterError

MIXTURE_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class AudioClip:
    """Time-domain multichannel signal, channel-major ``[channels, num_samples]``.

    Samples are stored as a read-only float array; build a new clip with
    :meth:`with_samples` instead of mutating.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise ParameterError(f"Clip samples must be [channels, num_samples], got shape {samples.shape}")
        if samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ParameterError(f"Clip needs at least one channel and one sample, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("Clip samples contain NaN or Inf")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ParameterError(f"Sample rate must be a positive integer, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.samples.shape

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples=samples, sample_rate=self.sample_rate)

    def same_layout(self, other: "AudioClip") -> bool:
        return self.shape == other.shape and self.sample_rate == other.sample_rate


def zeros_like(clip: AudioClip) -> AudioClip:
    return clip.with_samples(np.zeros(clip.shape))


def require_same_layout(*clips: AudioClip):
    first = clips[0]
    for other in clips[1:]:
        if not first.same_layout(other):
            raise ParameterError(
                f"Clip layout mismatch: {first.shape}@{first.sample_rate} Hz "
                f"vs {other.shape}@{other.sample_rate} Hz"
            )


@dataclass(frozen=True)
class SourceSet:
    """Named source clips and their mixture (the elementwise sum of the sources)."""

    sources: Tuple[Tuple[str, AudioClip], ...]
    mixture: AudioClip
    track_id: str = field(default="track")

    def __post_init__(self):
        sources = tuple((str(name), clip) for name, clip in self.sources)
        if not sources:
            raise ParameterError("A source set needs at least one source")
        require_same_layout(self.mixture, *[clip for _, clip in sources])
        names = [name for name, _ in sources]
        if len(set(names)) != len(names):
            raise ParameterError(f"Duplicate source names: {names}")
        total = np.sum([clip.samples for _, clip in sources], axis=0)
        deviation = float(np.max(np.abs(total - self.mixture.samples)))
        if deviation > MIXTURE_SUM_TOLERANCE:
            raise ParameterError(f"Mixture differs from the sum of sources by {deviation:.3g}")
        object.__setattr__(self, "sources", sources)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.sources]

    @property
    def clips(self) -> List[AudioClip]:
        return [clip for _, clip in self.sources]

    def __len__(self) -> int:
        return len(self.sources)

    def source(self, key) -> AudioClip:
        """Look a source up by name or index."""
        if isinstance(key, str):
            for name, clip in self.sources:
                if name == key:
                    return clip
            raise ParameterError(f"No source named '{key}' in {self.names}")
        return self.sources[key][1]


def mix_sources(named_clips: Sequence[Tuple[str, AudioClip]], track_id: str = "track") -> SourceSet:
    """Build a SourceSet whose mixture is the exact sum of the given clips."""
    clips = [clip for _, clip in named_clips]
    require_same_layout(*clips)
    mixture = clips[0].with_samples(np.sum([clip.samples for clip in clips], axis=0))
    return SourceSet(sources=tuple(named_clips), mixture=mixture, track_id=track_id)
