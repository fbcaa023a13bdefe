"""Seed fan-out.

Every random draw in the toolkit comes from a top-level integer seed combined
with a chain of labels ("init", "clip:3", ...). The derived key feeds a Philox
counter-based generator, so draws do not depend on platform or call order.
"""
import hashlib

import numpy as np

_SEED_MASK = (1 << 63) - 1


def derive_seed(seed: int, *labels) -> int:
    """Combine a seed with labels into a new 63-bit seed."""
    text = ":".join([str(int(seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & _SEED_MASK


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Return a Philox-backed generator keyed by (seed, labels)."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *labels)))
