"""O-D share matrices, error matrices and the RMS error metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ConsistencyError, InvalidMatrixError, ShapeMismatchError

SUM_TOL = 1e-9
ZERO_TOL = 1e-12


def _as_square(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidMatrixError(f"{what} must be a square 2-D grid, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise InvalidMatrixError(f"{what} needs at least 2 stops, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ODShareMatrix:
    """Share of trips boarding at stop ``i`` and alighting at stop ``o``.

    Entries lie in [0, 1] and sum to 1. ``signed=True`` relaxes the range
    check (not the unit sum); it is used for unclamped synthetic estimates,
    which can carry negative shares.
    """

    shares: np.ndarray
    labels: Optional[tuple[str, ...]] = None
    signed: bool = False

    def __post_init__(self):
        arr = _as_square(self.shares, "share matrix")
        object.__setattr__(self, "shares", arr)
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidMatrixError(f"shares sum to {total!r}, expected 1 within {SUM_TOL}")
        if not self.signed and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InvalidMatrixError(
                f"shares must lie in [0, 1], found range [{arr.min()!r}, {arr.max()!r}]"
            )
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != arr.shape[0]:
                raise InvalidMatrixError(
                    f"got {len(labels)} labels for a {arr.shape[0]}-stop matrix"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n_stops(self) -> int:
        return self.shares.shape[0]

    @property
    def boarding(self) -> np.ndarray:
        """Row marginals (share boarding at each stop)."""
        return self.shares.sum(axis=1)

    @property
    def alighting(self) -> np.ndarray:
        """Column marginals (share alighting at each stop)."""
        return self.shares.sum(axis=0)

    @property
    def has_negative(self) -> bool:
        return bool(self.shares.min() < 0.0)

    def mass_below_diagonal(self) -> float:
        return float(np.tril(self.shares, k=-1).sum())

    def permuted(self, perm: Sequence[int]) -> "ODShareMatrix":
        perm = np.asarray(perm)
        labels = None if self.labels is None else tuple(self.labels[p] for p in perm)
        return ODShareMatrix(self.shares[np.ix_(perm, perm)], labels, self.signed)

    def __eq__(self, other):
        if not isinstance(other, ODShareMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.shares, other.shares)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DeltaMatrix:
    """Signed share differences ``estimate - reference``; entries sum to 0.

    ``bounded=False`` skips the [-1, 1] range check, for differences against
    unclamped estimates that are not valid share matrices themselves.
    """

    deltas: np.ndarray
    bounded: bool = True

    def __post_init__(self):
        arr = _as_square(self.deltas, "delta matrix")
        object.__setattr__(self, "deltas", arr)
        total = float(arr.sum())
        if abs(total) > SUM_TOL:
            raise InvalidMatrixError(f"deltas sum to {total!r}, expected 0 within {SUM_TOL}")
        if self.bounded and np.abs(arr).max() > 1.0:
            raise InvalidMatrixError("delta entries must lie in [-1, 1]")

    @property
    def n_stops(self) -> int:
        return self.deltas.shape[0]

    @property
    def boarding(self) -> np.ndarray:
        return self.deltas.sum(axis=1)

    @property
    def alighting(self) -> np.ndarray:
        return self.deltas.sum(axis=0)

    @classmethod
    def zeros(cls, n_stops: int) -> "DeltaMatrix":
        return cls(np.zeros((n_stops, n_stops)))


@dataclass(frozen=True)
class ErrorSummary:
    """RMS errors per O-D cell, per boarding stop and per alighting stop.

    ``ratio_in``/``ratio_out`` are ``None`` when the O-D error is exactly zero.
    """

    err_od: float
    err_in: float
    err_out: float
    ratio_in: Optional[float] = field(default=None)
    ratio_out: Optional[float] = field(default=None)

    @classmethod
    def from_errors(cls, err_od: float, err_in: float, err_out: float) -> "ErrorSummary":
        if min(err_od, err_in, err_out) < 0 or not all(
            math.isfinite(v) for v in (err_od, err_in, err_out)
        ):
            raise ConsistencyError("RMS errors must be finite and nonnegative")
        if err_od == 0.0:
            if err_in > 0.0 or err_out > 0.0:
                raise ConsistencyError(
                    "zero O-D error with nonzero marginal errors is impossible"
                )
            return cls(0.0, 0.0, 0.0, None, None)
        return cls(err_od, err_in, err_out, err_in / err_od, err_out / err_od)

    @property
    def defined(self) -> bool:
        return self.ratio_in is not None


def delta(reference: ODShareMatrix, estimate: ODShareMatrix) -> DeltaMatrix:
    """Entrywise ``estimate - reference``."""
    if reference.n_stops != estimate.n_stops:
        raise ShapeMismatchError(
            f"reference has N={reference.n_stops} stops but estimate has N={estimate.n_stops}"
        )
    return DeltaMatrix(
        estimate.shares - reference.shares, bounded=not (reference.signed or estimate.signed)
    )


def error_summary(d: DeltaMatrix | np.ndarray) -> ErrorSummary:
    arr = d.deltas if isinstance(d, DeltaMatrix) else np.asarray(d, dtype=np.float64)
    return ErrorSummary.from_errors(*_kernels.rms_errors(arr))


def marginal_errors_against(
    estimate: ODShareMatrix, boarding: np.ndarray, alighting: np.ndarray
) -> tuple[float, float]:
    """RMS boarding/alighting errors of ``estimate`` against external count shares."""
    boarding = np.asarray(boarding, dtype=np.float64)
    alighting = np.asarray(alighting, dtype=np.float64)
    n = estimate.n_stops
    if boarding.shape != (n,) or alighting.shape != (n,):
        raise ShapeMismatchError(
            f"counts cover {boarding.shape[0]} stops but the matrix has N={n}"
        )
    d_in = estimate.boarding - boarding
    d_out = estimate.alighting - alighting
    return float(np.sqrt(np.mean(d_in**2))), float(np.sqrt(np.mean(d_out**2)))


def compare(
    reference: ODShareMatrix,
    estimate: ODShareMatrix,
    counts: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> ErrorSummary:
    """Error summary of a pair; marginal errors use ``counts`` as baseline when given."""
    s = error_summary(delta(reference, estimate))
    if counts is None:
        return s
    err_in, err_out = marginal_errors_against(estimate, *counts)
    if s.err_od == 0.0:
        return ErrorSummary(0.0, err_in, err_out, None, None)
    return ErrorSummary(s.err_od, err_in, err_out, err_in / s.err_od, err_out / s.err_od)
