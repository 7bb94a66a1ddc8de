"""Inner loops with a numba path and a pure-numpy path.

The backend is picked once at import time. Set ``ODNOISE_NUMBA=0`` to force
the numpy path; if numba cannot be imported the numpy path is used anyway.
Both paths are always importable so tests and benchmarks can compare them.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ODNOISE_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)

CLAMP_MAX_ITER = 100


def _njit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=False, nogil=True)(func)
    return func


# ---------------------------------------------------------------------------
# clamping


def clamp_nonnegative_numpy(x: np.ndarray, max_iter: int = CLAMP_MAX_ITER):
    """Zero out negative shares and take the deficit evenly off the positive ones.

    Repeats until nothing is negative. Returns ``(clamped, events, iterations)``
    where ``iterations`` is -1 when the cap was hit.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    events = 0
    for it in range(max_iter):
        neg = x < 0.0
        if not neg.any():
            return x, events, it
        deficit = -x[neg].sum()
        events += int(neg.sum())
        x[neg] = 0.0
        pos = x > 0.0
        k = int(pos.sum())
        if k == 0:
            return x, events, -1
        x[pos] -= deficit / k
    if (x < 0.0).any():
        return x, events, -1
    return x, events, max_iter


def _clamp_nonnegative_nb(x, max_iter):
    out = x.copy()
    flat = out.ravel()
    m = flat.size
    events = 0
    for it in range(max_iter):
        deficit = 0.0
        nneg = 0
        for j in range(m):
            if flat[j] < 0.0:
                deficit -= flat[j]
                flat[j] = 0.0
                nneg += 1
        if nneg == 0:
            return out, events, it
        events += nneg
        k = 0
        for j in range(m):
            if flat[j] > 0.0:
                k += 1
        if k == 0:
            return out, events, -1
        step = deficit / k
        for j in range(m):
            if flat[j] > 0.0:
                flat[j] -= step
    for j in range(m):
        if flat[j] < 0.0:
            return out, events, -1
    return out, events, max_iter


_clamp_nonnegative_jit = _njit(_clamp_nonnegative_nb)


def clamp_nonnegative_numba(x: np.ndarray, max_iter: int = CLAMP_MAX_ITER):
    out, events, it = _clamp_nonnegative_jit(np.ascontiguousarray(x, dtype=np.float64), max_iter)
    return out, int(events), int(it)


# ---------------------------------------------------------------------------
# RMS errors of a delta matrix


def rms_errors_numpy(d: np.ndarray) -> tuple[float, float, float]:
    n_rows, n_cols = d.shape
    err_od = float(np.sqrt(np.sum(d * d) / (n_rows * n_cols)))
    rows = d.sum(axis=1)
    cols = d.sum(axis=0)
    err_in = float(np.sqrt(np.sum(rows * rows) / n_rows))
    err_out = float(np.sqrt(np.sum(cols * cols) / n_cols))
    return err_od, err_in, err_out


def _rms_errors_nb(d):
    n_rows, n_cols = d.shape
    cols = np.zeros(n_cols)
    sq = 0.0
    sq_rows = 0.0
    for i in range(n_rows):
        r = 0.0
        for o in range(n_cols):
            v = d[i, o]
            sq += v * v
            r += v
            cols[o] += v
        sq_rows += r * r
    sq_cols = 0.0
    for o in range(n_cols):
        sq_cols += cols[o] * cols[o]
    return (
        np.sqrt(sq / (n_rows * n_cols)),
        np.sqrt(sq_rows / n_rows),
        np.sqrt(sq_cols / n_cols),
    )


_rms_errors_jit = _njit(_rms_errors_nb)


def rms_errors_numba(d: np.ndarray) -> tuple[float, float, float]:
    a, b, c = _rms_errors_jit(np.ascontiguousarray(d, dtype=np.float64))
    return float(a), float(b), float(c)


# ---------------------------------------------------------------------------
# Lowess local linear fits (no robustness passes)


def lowess_numpy(x: np.ndarray, y: np.ndarray, x_eval: np.ndarray, k: int) -> np.ndarray:
    """Tricube-weighted local linear fit at each ``x_eval`` over the ``k`` nearest ``x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.empty(len(x_eval))
    for j, x0 in enumerate(np.asarray(x_eval, dtype=np.float64)):
        dist = np.abs(x - x0)
        h = np.partition(dist, k - 1)[k - 1]
        out[j] = _local_linear_numpy(x, y, dist, h, x0)
    return out


def _local_linear_numpy(x, y, dist, h, x0):
    if h <= 0.0:
        return float(y[dist == 0.0].mean())
    u = np.clip(dist / h, 0.0, 1.0)
    w = (1.0 - u**3) ** 3
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    if sxx <= 1e-300:
        return float(ym)
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    return float(ym + slope * (x0 - xm))


def _lowess_nb(x, y, x_eval, k):
    n = x.size
    out = np.empty(x_eval.size)
    dist = np.empty(n)
    for j in range(x_eval.size):
        x0 = x_eval[j]
        for i in range(n):
            dist[i] = abs(x[i] - x0)
        h = np.sort(dist)[k - 1]
        if h <= 0.0:
            s = 0.0
            c = 0
            for i in range(n):
                if dist[i] == 0.0:
                    s += y[i]
                    c += 1
            out[j] = s / c
            continue
        sw = 0.0
        swx = 0.0
        swy = 0.0
        w = np.empty(n)
        for i in range(n):
            u = dist[i] / h
            if u >= 1.0:
                w[i] = 0.0
            else:
                t = 1.0 - u * u * u
                w[i] = t * t * t
            sw += w[i]
            swx += w[i] * x[i]
            swy += w[i] * y[i]
        xm = swx / sw
        ym = swy / sw
        sxx = 0.0
        sxy = 0.0
        for i in range(n):
            dx = x[i] - xm
            sxx += w[i] * dx * dx
            sxy += w[i] * dx * (y[i] - ym)
        if sxx <= 1e-300:
            out[j] = ym
        else:
            out[j] = ym + sxy / sxx * (x0 - xm)
    return out


_lowess_jit = _njit(_lowess_nb)


def lowess_numba(x: np.ndarray, y: np.ndarray, x_eval: np.ndarray, k: int) -> np.ndarray:
    return _lowess_jit(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(x_eval, dtype=np.float64),
        int(k),
    )


if USE_NUMBA:
    clamp_nonnegative = clamp_nonnegative_numba
    rms_errors = rms_errors_numba
    lowess_fit = lowess_numba
else:
    clamp_nonnegative = clamp_nonnegative_numpy
    rms_errors = rms_errors_numpy
    lowess_fit = lowess_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
