"""Perturbation constraints C(eta) and their proximal operators.

GD treats lambda * C(eta) through its proximal map: after every gradient step on
the data term, eta is replaced by ``prox_{t * C}(eta)`` with t = lr * lambda.
For the three measures this is norm shrinkage (l2), group shrinkage per patch
(stpr) and the residual of an l1-ball projection (sup).
"""
import numpy as np

from attacks.config import ConstraintKind
from audio_io.clip import AudioClip, require_same_layout
from dsp.patches import num_patches, patch_norm_values
from errors import ParameterError


def stpr_denominators(x: np.ndarray, patch_length: int, floor: float) -> np.ndarray:
    return np.maximum(patch_norm_values(x, patch_length), floor)


def constraint_array(eta: np.ndarray, x: np.ndarray, c: ConstraintKind, sample_rate: int) -> float:
    if c.kind == "l2":
        return float(np.sqrt(np.sum(eta ** 2)))
    if c.kind == "sup":
        return float(np.max(np.abs(eta)))
    patch_length = c.patch_length(sample_rate)
    ratios = patch_norm_values(eta, patch_length) / stpr_denominators(x, patch_length, c.floor)
    return float(np.sum(ratios))


def constraint_value(eta: AudioClip, x: AudioClip, c: ConstraintKind) -> float:
    """l2: global l2 norm; sup: max |sample|; stpr: sum over patches of ||eta_n|| / max(||x_n||, floor)."""
    require_same_layout(eta, x)
    return constraint_array(eta.samples, x.samples, c, x.sample_rate)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {u : ||u||_1 <= radius} by sorting."""
    if radius < 0:
        raise ParameterError(f"l1-ball radius must be non-negative, got {radius}")
    flat = np.abs(v).ravel()
    if flat.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    ordered = np.sort(flat)[::-1]
    cumulative = np.cumsum(ordered)
    ranks = np.arange(1, len(ordered) + 1)
    rho = np.nonzero(ordered * ranks > cumulative - radius)[0][-1]
    theta = (cumulative[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def _shrink(block: np.ndarray, norm: np.ndarray, threshold: np.ndarray) -> np.ndarray:
    scale = np.zeros_like(norm)
    keep = norm > threshold
    scale[keep] = 1.0 - threshold[keep] / norm[keep]
    return block * scale


def prox_constraint(eta: np.ndarray, x: np.ndarray, c: ConstraintKind, threshold: float, sample_rate: int) -> np.ndarray:
    """argmin_u 0.5 * ||u - eta||^2 + threshold * C(u)."""
    if threshold <= 0:
        return eta.copy()
    if c.kind == "l2":
        norm = float(np.sqrt(np.sum(eta ** 2)))
        if norm <= threshold:
            return np.zeros_like(eta)
        return eta * (1.0 - threshold / norm)
    if c.kind == "sup":
        return eta - project_l1_ball(eta, threshold)

    patch_length = c.patch_length(sample_rate)
    channels, length = eta.shape
    count = num_patches(length, patch_length)
    padded = np.zeros((channels, count * patch_length))
    padded[:, :length] = eta
    blocks = padded.reshape(channels, count, patch_length)
    norms = np.sqrt(np.sum(blocks ** 2, axis=(0, 2)))
    thresholds = threshold / stpr_denominators(x, patch_length, c.floor)
    shrunk = _shrink(blocks, norms[np.newaxis, :, np.newaxis], thresholds[np.newaxis, :, np.newaxis])
    return shrunk.reshape(channels, -1)[:, :length]
