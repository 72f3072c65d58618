"""Seed handling.

Every random operation takes an explicit seed. Replication seeds are derived
from a base seed with a splitmix64 finalizer::

    derive_seed(base, r) = splitmix64(base XOR splitmix64(r))

where ``splitmix64(z)`` is the standard 64-bit mixer

    z = (z + 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (int(z) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for stream ``index`` under ``base_seed`` (both unsigned 64-bit)."""
    return splitmix64((int(base_seed) & MASK64) ^ splitmix64(index))


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(check_seed(seed))
