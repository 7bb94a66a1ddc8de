"""Lowess curves of error ratio against N and their use to estimate O-D error.

A fitted curve maps the number of stops to the ratio between a count-based
error (boarding or alighting) and the O-D error; dividing a measured count
error by that ratio estimates the O-D error itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import ConsistencyError, ExtrapolationError, ODNoiseError

DEFAULT_FRAC = 0.2


@dataclass(frozen=True, eq=False)
class LowessModel:
    knots_n: np.ndarray
    knots_ratio: np.ndarray
    frac: float = DEFAULT_FRAC
    side: str = "boarding"

    def __post_init__(self):
        x = np.asarray(self.knots_n, dtype=np.float64)
        y = np.asarray(self.knots_ratio, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise ODNoiseError("knots must be two 1-D arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise ODNoiseError("knots must be sorted by strictly increasing N")
        if not 0.0 < self.frac <= 1.0:
            raise ODNoiseError(f"frac must be in (0, 1], got {self.frac}")
        if self.side not in ("boarding", "alighting"):
            raise ODNoiseError(f"side must be boarding or alighting, got {self.side!r}")
        object.__setattr__(self, "knots_n", x)
        object.__setattr__(self, "knots_ratio", y)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.knots_n.tolist(), self.knots_ratio.tolist()))

    @property
    def n_range(self) -> tuple[float, float]:
        return float(self.knots_n[0]), float(self.knots_n[-1])


def window_size(count: int, frac: float) -> int:
    return min(count, int(math.ceil(frac * count - 1e-12)))


def lowess_smooth(x, y, frac: float = DEFAULT_FRAC, x_eval=None) -> np.ndarray:
    """Local linear Lowess without robustness iterations.

    Each fit uses the ``ceil(frac * len(x))`` points nearest to the evaluation
    point, weighted by ``(1 - (d/d_max)**3)**3`` with ``d_max`` the distance to
    the farthest of them.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x_eval = x if x_eval is None else np.asarray(x_eval, dtype=np.float64)
    return _kernels.lowess_fit(x, y, x_eval, window_size(x.size, frac))


def fit_lowess(points: Iterable[tuple[float, float]], frac: float = DEFAULT_FRAC, side: str = "boarding") -> LowessModel:
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ODNoiseError(f"need at least 3 (N, ratio) points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ODNoiseError("points contain undefined or non-finite values")
    if not 0.0 < frac <= 1.0:
        raise ODNoiseError(f"frac must be in (0, 1], got {frac}")
    x, y = pts[:, 0], pts[:, 1]
    if np.all(x == x[0]):
        raise ODNoiseError("all points share the same N; the fit is degenerate")
    if frac * x.size < 2:
        raise ODNoiseError(
            f"frac={frac} leaves fewer than 2 neighbours among {x.size} points"
        )
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    grid = np.unique(x)
    fitted = lowess_smooth(x, y, frac, grid)
    if np.any(fitted <= 0):
        raise ODNoiseError("fitted ratios must be positive")
    return LowessModel(grid, fitted, float(frac), side)


def predict_ratio(model: LowessModel, n_stops: float) -> float:
    """Fitted ratio at ``n_stops``, linearly interpolated between knots."""
    lo, hi = model.n_range
    n = float(n_stops)
    if not lo <= n <= hi:
        raise ExtrapolationError(
            f"N={n_stops} lies outside the fitted range [{lo:g}, {hi:g}]; refusing to extrapolate"
        )
    return float(np.interp(n, model.knots_n, model.knots_ratio))


def infer_od_error(model: LowessModel, n_stops: float, count_error: float) -> float:
    """Estimate the O-D error from a boarding or alighting error at ``n_stops``."""
    if not count_error >= 0:
        raise ODNoiseError(f"count_error must be >= 0, got {count_error}")
    ratio = predict_ratio(model, n_stops)
    if ratio <= 0:
        raise ConsistencyError(f"fitted ratio {ratio} at N={n_stops} is not positive")
    return float(count_error) / ratio
