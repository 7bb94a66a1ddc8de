"""Synthetic reference O-D matrices."""
from __future__ import annotations

import numpy as np

from .core import ODShareMatrix
from .errors import ODNoiseError
from .seeding import make_rng


def generate_uniform(n_stops: int, seed: int) -> ODShareMatrix:
    """i.i.d. uniform (0, 1] entries rescaled to sum to one."""
    if int(n_stops) != n_stops or n_stops < 2:
        raise ODNoiseError(f"n_stops must be an integer >= 2, got {n_stops!r}")
    n = int(n_stops)
    rng = make_rng(seed)
    # 1 - U[0,1) lies in (0,1]: no exact zeros
    raw = 1.0 - rng.random((n, n))
    return ODShareMatrix(raw / raw.sum())
