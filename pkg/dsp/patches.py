from dataclasses import dataclass

import numpy as np

from audio_io.clip import AudioClip
from errors import ParameterError


@dataclass(frozen=True)
class PatchNorms:
    """l2 norm of every consecutive ``patch_length``-sample patch, all channels pooled."""

    values: np.ndarray
    patch_length: int

    def __len__(self) -> int:
        return len(self.values)


def num_patches(num_samples: int, patch_length: int) -> int:
    return -(-num_samples // patch_length)


def patch_norm_values(samples: np.ndarray, patch_length: int) -> np.ndarray:
    """Average-pool the squared samples over each patch, then rescale to an l2 norm.

    The final partial patch is zero-padded and kept.
    """
    if patch_length < 1:
        raise ParameterError(f"Patch length must be at least 1, got {patch_length}")
    channels, length = samples.shape
    count = num_patches(length, patch_length)
    padded = np.zeros((channels, count * patch_length))
    padded[:, :length] = samples
    pooled = np.mean(padded.reshape(channels, count, patch_length) ** 2, axis=(0, 2))
    return np.sqrt(pooled * channels * patch_length)


def patch_l2_norms(clip: AudioClip, l: int) -> PatchNorms:
    return PatchNorms(values=patch_norm_values(clip.samples, l), patch_length=l)
