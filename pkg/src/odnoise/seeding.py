"""Seed handling.

Child seeds come from the SplitMix64 finalizer: ``derive_seed(base, k1, k2, ...)``
folds each key in turn as ``s = mix64(s ^ mix64(key + GOLDEN))``. All values are
unsigned 64-bit. Generators are numpy PCG64 seeded with the resulting integer.
"""
from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SEED_ENV = "OD_NOISE_SEED"


def mix64(z: int) -> int:
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *keys: int) -> int:
    s = int(base) & MASK64
    for k in keys:
        s = mix64(s ^ mix64((int(k) + GOLDEN) & MASK64))
    return s


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def resolve_seed(seed: int | None) -> int:
    """Return ``seed`` or fall back to ``$OD_NOISE_SEED``; no unseeded default."""
    if seed is not None:
        return int(seed) & MASK64
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        raise ValueError(f"no seed given and {SEED_ENV} is not set")
    try:
        return int(env.strip(), 0) & MASK64
    except ValueError:
        raise ValueError(f"{SEED_ENV}={env!r} is not an integer") from None
