"""Small shared helpers: seeding, clamping, canonical JSON."""

from __future__ import annotations

import json
from typing import Any

import numpy as np


def rng_from(seed: int | np.random.SeedSequence, *tags: int) -> np.random.Generator:
    """Derive an independent generator from a run seed and integer tags.

    Every source of randomness in the package goes through this so that a
    single run seed reproduces bit-identical results.
    """
    if isinstance(seed, np.random.SeedSequence):
        entropy = [seed.entropy if seed.entropy is not None else 0, *tags]
    else:
        entropy = [int(seed), *tags]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def clamp01(value: float) -> float:
    return 0.0 if value < 0.0 else 1.0 if value > 1.0 else value


def engagement_bin(value: float, n_bins: int = 10) -> int:
    """Bin index for an engagement value: right-open bins, last bin closed."""
    v = clamp01(value)
    idx = int(v * n_bins)
    return n_bins - 1 if idx >= n_bins else idx


def canonical_json(payload: Any) -> str:
    """Stable JSON encoding used wherever byte-identical output matters."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
