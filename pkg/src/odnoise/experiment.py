"""Monte Carlo sweeps over the number of stops, stop aggregation, empirical points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .core import ODShareMatrix, compare, delta
from .errors import ODNoiseError, ShapeMismatchError
from .noise import NoiseSpec, perturb_array
from .seeding import derive_seed, make_rng
from .synth import generate_uniform

AVERAGING = ("mean_of_ratios", "ratio_of_mean_errors")
SIDES = ("boarding", "alighting")


@dataclass(frozen=True)
class SweepConfig:
    spec: NoiseSpec
    n_values: tuple[int, ...] = tuple(range(2, 101))
    replicates: int = 10
    reference: Optional[ODShareMatrix] = None
    reference_seed: int = 0
    averaging: str = "mean_of_ratios"
    per_replicate_reference: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values:
            raise ODNoiseError("n_values is empty")
        if list(n_values) != sorted(n_values) or len(set(n_values)) != len(n_values):
            raise ODNoiseError("n_values must be strictly increasing")
        if n_values[0] < 2:
            raise ODNoiseError("every N in n_values must be >= 2")
        object.__setattr__(self, "n_values", n_values)
        if int(self.replicates) < 1:
            raise ODNoiseError(f"replicates must be >= 1, got {self.replicates}")
        if self.averaging not in AVERAGING:
            raise ODNoiseError(f"averaging must be one of {AVERAGING}, got {self.averaging!r}")
        if self.reference is not None and n_values != (self.reference.n_stops,):
            raise ShapeMismatchError(
                f"provided reference has N={self.reference.n_stops} but n_values={list(n_values)}"
            )

    @property
    def master_seed(self) -> int:
        return self.spec.seed if self.seed is None else int(self.seed)

    @classmethod
    def for_reference(cls, spec: NoiseSpec, reference: ODShareMatrix, **kw) -> "SweepConfig":
        return cls(spec, n_values=(reference.n_stops,), reference=reference, **kw)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-N ratio statistics, with the per-replicate errors they came from.

    ``err_od``, ``err_in`` and ``err_out`` have shape ``(len(n_values), R)``.
    """

    config: SweepConfig
    n_values: np.ndarray
    err_od: np.ndarray
    err_in: np.ndarray
    err_out: np.ndarray
    replicate_seeds: np.ndarray
    reference_seeds: np.ndarray
    mean_ratio_in: np.ndarray = field(init=False)
    mean_ratio_out: np.ndarray = field(init=False)
    std_ratio_in: np.ndarray = field(init=False)
    std_ratio_out: np.ndarray = field(init=False)
    mean_err_od: np.ndarray = field(init=False)

    def __post_init__(self):
        rin, rout = self.ratio_in, self.ratio_out
        if self.config.averaging == "mean_of_ratios":
            mean_in = _nanmean(rin)
            mean_out = _nanmean(rout)
        else:
            od = self.err_od.mean(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                mean_in = np.where(od > 0, self.err_in.mean(axis=1) / od, np.nan)
                mean_out = np.where(od > 0, self.err_out.mean(axis=1) / od, np.nan)
        object.__setattr__(self, "mean_ratio_in", mean_in)
        object.__setattr__(self, "mean_ratio_out", mean_out)
        object.__setattr__(self, "std_ratio_in", _nanstd(rin))
        object.__setattr__(self, "std_ratio_out", _nanstd(rout))
        object.__setattr__(self, "mean_err_od", self.err_od.mean(axis=1))

    @property
    def ratio_in(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.err_od > 0, self.err_in / self.err_od, np.nan)

    @property
    def ratio_out(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.err_od > 0, self.err_out / self.err_od, np.nan)

    @property
    def replicates(self) -> int:
        return self.err_od.shape[1]

    @property
    def sem_ratio_in(self) -> np.ndarray:
        return self.std_ratio_in / np.sqrt(self._counts(self.ratio_in))

    @property
    def sem_ratio_out(self) -> np.ndarray:
        return self.std_ratio_out / np.sqrt(self._counts(self.ratio_out))

    @staticmethod
    def _counts(r):
        return np.maximum(np.sum(np.isfinite(r), axis=1), 1)

    def row(self, n_stops: int) -> int:
        hits = np.flatnonzero(self.n_values == n_stops)
        if hits.size == 0:
            raise KeyError(n_stops)
        return int(hits[0])


def _nanmean(a):
    out = np.full(a.shape[0], np.nan)
    for k, row in enumerate(a):
        ok = row[np.isfinite(row)]
        if ok.size:
            out[k] = ok.mean()
    return out


def _nanstd(a):
    out = np.full(a.shape[0], np.nan)
    for k, row in enumerate(a):
        ok = row[np.isfinite(row)]
        if ok.size > 1:
            out[k] = ok.std(ddof=1)
        elif ok.size == 1:
            out[k] = 0.0
    return out


def _reference_for(config: SweepConfig, n: int, r: Optional[int]):
    if config.reference is not None:
        return config.reference.shares, 0
    keys = (n,) if r is None else (n, r)
    s = derive_seed(config.reference_seed, *keys)
    return generate_uniform(n, s).shares, s


def run_sweep(config: SweepConfig) -> SweepResult:
    """Apply ``config.spec`` ``R`` times for every N and collect the RMS errors.

    Replicate ``r`` at size ``N`` uses seed ``derive_seed(master, N, r)``, so the
    result does not depend on evaluation order.
    """
    n_rows, reps = len(config.n_values), int(config.replicates)
    err = np.empty((3, n_rows, reps))
    rep_seeds = np.empty((n_rows, reps), dtype=np.uint64)
    ref_seeds = np.zeros((n_rows, reps if config.per_replicate_reference else 1), dtype=np.uint64)
    master = config.master_seed
    for k, n in enumerate(config.n_values):
        shares = None
        if not config.per_replicate_reference:
            shares, ref_seeds[k, 0] = _reference_for(config, n, None)
        for r in range(reps):
            if config.per_replicate_reference:
                shares, ref_seeds[k, r] = _reference_for(config, n, r)
            s = derive_seed(master, n, r)
            rep_seeds[k, r] = s
            est, _ = perturb_array(config.spec, shares, make_rng(s))
            err[:, k, r] = _kernels.rms_errors(est - shares)
    return SweepResult(
        config,
        np.asarray(config.n_values),
        err[0],
        err[1],
        err[2],
        rep_seeds,
        ref_seeds,
    )


def empirical_points(pairs: Sequence[tuple[ODShareMatrix, ODShareMatrix]]):
    """``(N, ratio_in, ratio_out)`` for each (reference, estimate) pair; ratios may be None."""
    out = []
    for ref, est in pairs:
        s = compare(ref, est)
        out.append((ref.n_stops, s.ratio_in, s.ratio_out))
    return out


# ---------------------------------------------------------------------------
# stop aggregation


def aggregate_delta(d: np.ndarray, n: int, side: str) -> np.ndarray:
    """Sum consecutive blocks of ``n`` boarding (rows) or alighting (columns) stops.

    The last block keeps whatever stops remain.
    """
    d = np.asarray(d, dtype=np.float64)
    size = d.shape[0]
    if side not in SIDES:
        raise ODNoiseError(f"side must be boarding or alighting, got {side!r}")
    if int(n) != n or not 1 <= n <= size:
        raise ODNoiseError(f"aggregation size must satisfy 1 <= n <= N={size}, got {n}")
    starts = np.arange(0, size, int(n))
    axis = 0 if side == "boarding" else 1
    return np.add.reduceat(d, starts, axis=axis)


def aggregated_err(d: np.ndarray, n: int, side: str) -> float:
    agg = aggregate_delta(d, n, side)
    return float(np.sqrt(np.mean(agg * agg)))


def aggregate_and_score(
    reference: ODShareMatrix, estimate: ODShareMatrix, n: int, side: str
) -> float:
    """RMS error per entry of the error matrix after bundling ``n`` stops on ``side``."""
    return aggregated_err(delta(reference, estimate).deltas, n, side)


@dataclass(frozen=True, eq=False)
class AggregationResult:
    """Aggregated O-D errors per replicate, shape ``(len(sizes), R)`` for each side."""

    n_stops: int
    sizes: np.ndarray
    boarding: np.ndarray
    alighting: np.ndarray
    baseline: np.ndarray

    def mean(self, side: str) -> np.ndarray:
        return getattr(self, side).mean(axis=1)

    def sem(self, side: str) -> np.ndarray:
        a = getattr(self, side)
        if a.shape[1] < 2:
            return np.zeros(a.shape[0])
        return a.std(axis=1, ddof=1) / math.sqrt(a.shape[1])

    def gap(self) -> np.ndarray:
        """Mean of (boarding - alighting) per size, paired over replicates."""
        return (self.boarding - self.alighting).mean(axis=1)

    def gap_sem(self) -> np.ndarray:
        diff = self.boarding - self.alighting
        if diff.shape[1] < 2:
            return np.zeros(diff.shape[0])
        return diff.std(axis=1, ddof=1) / math.sqrt(diff.shape[1])


def aggregation_study(
    spec: NoiseSpec,
    n_stops: int,
    sizes: Sequence[int],
    replicates: int = 200,
    reference: Optional[ODShareMatrix] = None,
    reference_seed: int = 0,
    seed: Optional[int] = None,
) -> AggregationResult:
    """Score both aggregation sides on the same noise draws."""
    if reference is None:
        reference = generate_uniform(n_stops, derive_seed(reference_seed, n_stops))
    elif reference.n_stops != n_stops:
        raise ShapeMismatchError(
            f"reference has N={reference.n_stops} but n_stops={n_stops}"
        )
    sizes = np.asarray(sizes, dtype=int)
    master = spec.seed if seed is None else int(seed)
    board = np.empty((sizes.size, replicates))
    alight = np.empty((sizes.size, replicates))
    base = np.empty(replicates)
    shares = reference.shares
    for r in range(replicates):
        est, _ = perturb_array(spec, shares, make_rng(derive_seed(master, n_stops, r)))
        d = est - shares
        base[r] = math.sqrt(float(np.mean(d * d)))
        for j, n in enumerate(sizes):
            board[j, r] = aggregated_err(d, int(n), "boarding")
            alight[j, r] = aggregated_err(d, int(n), "alighting")
    return AggregationResult(n_stops, sizes, board, alight, base)
