#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--n 60] [--repeat 200]

The numba timings exclude the first (compiling) call. A whole-sweep timing
under the currently selected backend is printed at the end; rerun with
ODNOISE_NUMBA=0 to time the sweep on the numpy path.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from odnoise import NoiseSpec, NoiseTerm, SweepConfig, run_sweep
from odnoise import _kernels as K


def best_of(fn, repeat):
    best = np.inf
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n = args.n

    d = rng.uniform(-0.1, 0.1, (n, n))
    d -= d.mean()
    shares = np.full((n, n), 1 / n**2)
    clamp_in = shares * (1 + rng.uniform(-3, 3, (n, n)))
    clamp_in += (1 - clamp_in.sum()) / clamp_in.size
    x = np.arange(2.0, 2.0 + 4 * n)
    y = np.sqrt(x) + rng.normal(0, 0.1, x.size)
    k = int(np.ceil(0.2 * x.size))

    cases = [
        ("rms_errors", lambda: K.rms_errors_numpy(d), lambda: K.rms_errors_numba(d)),
        ("clamp_nonnegative", lambda: K.clamp_nonnegative_numpy(clamp_in), lambda: K.clamp_nonnegative_numba(clamp_in)),
        ("lowess", lambda: K.lowess_numpy(x, y, x, k), lambda: K.lowess_numba(x, y, x, k)),
    ]
    print(f"backend selected: {K.BACKEND}  (numba available: {K.HAVE_NUMBA})")
    print(f"{'kernel':<20}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>10}")
    for name, f_np, f_nb in cases:
        t_np = best_of(f_np, args.repeat)
        if K.HAVE_NUMBA:
            f_nb()
            t_nb = best_of(f_nb, args.repeat)
            print(f"{name:<20}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<20}{t_np * 1e6:>12.1f}{'-':>12}{'-':>10}")

    spec = NoiseSpec((NoiseTerm("central_od", 0.1),), clamped=True, seed=1)
    cfg = SweepConfig(spec, n_values=tuple(range(10, 101, 10)), replicates=100)
    run_sweep(SweepConfig(spec, n_values=(10,), replicates=1))
    t0 = time.perf_counter()
    run_sweep(cfg)
    print(f"clamped sweep (N=10..100 step 10, R=100) on {K.BACKEND}: {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
