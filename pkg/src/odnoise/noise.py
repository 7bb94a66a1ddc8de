"""Random noise models applied to O-D share matrices.

Every model produces a zero-sum error matrix ``raw - mean(raw)``: the raw term
is drawn cell by cell, per row, or per column, and the grand mean over all
``N*N`` cells is subtracted so the estimate still sums to one. Terms combine by
addition; :func:`apply` then optionally clamps negative shares and
renormalizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import _kernels
from .core import DeltaMatrix, ODShareMatrix
from .errors import ClampError, EmptyMaskError, FormatError, ODNoiseError
from .seeding import make_rng

KINDS = ("additive", "multiplicative", "short_od", "central_od", "boarding", "alighting")
DISTRIBUTIONS = ("uniform_symmetric", "gaussian")
DEFAULT_BAND = (1.0 / 8.0, 3.0 / 8.0)


@dataclass(frozen=True)
class NoiseTerm:
    kind: str
    amplitude: float
    distribution: str = "uniform_symmetric"
    short_radius: int = 2
    central_band: tuple[float, float] = DEFAULT_BAND
    positive_only: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ODNoiseError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if self.distribution not in DISTRIBUTIONS:
            raise ODNoiseError(
                f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}"
            )
        amp = float(self.amplitude)
        if not (amp > 0.0 and math.isfinite(amp)):
            raise ODNoiseError(f"amplitude must be > 0, got {self.amplitude!r}")
        object.__setattr__(self, "amplitude", amp)
        if int(self.short_radius) != self.short_radius or self.short_radius < 0:
            raise ODNoiseError(f"short_radius must be a nonnegative integer, got {self.short_radius!r}")
        object.__setattr__(self, "short_radius", int(self.short_radius))
        lo, hi = (float(v) for v in self.central_band)
        if not (0.0 <= lo < hi <= 1.0):
            raise ODNoiseError(f"central_band must satisfy 0 <= lo < hi <= 1, got {(lo, hi)}")
        object.__setattr__(self, "central_band", (lo, hi))


@dataclass(frozen=True)
class NoiseSpec:
    terms: tuple[NoiseTerm, ...]
    clamped: bool = False
    seed: int = 0

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ODNoiseError("a noise spec needs at least one term")
        object.__setattr__(self, "terms", terms)

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.terms, self.clamped, seed)

    def to_text(self) -> str:
        return spec_to_text(self)

    @classmethod
    def from_text(cls, text: str) -> "NoiseSpec":
        return spec_from_text(text)


@dataclass(frozen=True)
class NoiseRealization:
    delta: DeltaMatrix
    clamp_events: int
    seed_used: int


def _xi(rng: np.random.Generator, sigma: float, distribution: str, size) -> np.ndarray:
    if distribution == "gaussian":
        return rng.normal(0.0, sigma, size)
    return rng.uniform(-sigma, sigma, size)


def _recentre(raw: np.ndarray) -> np.ndarray:
    return raw - raw.mean()


def short_mask(n_stops: int, radius: int = 2) -> np.ndarray:
    """Boolean mask of cells at most ``radius`` stops apart."""
    if radius >= n_stops:
        raise ODNoiseError(f"short_radius={radius} must be smaller than N={n_stops}")
    idx = np.arange(n_stops)
    return np.abs(idx[:, None] - idx[None, :]) <= radius


def central_indices(n_stops: int, band: tuple[float, float] = DEFAULT_BAND) -> np.ndarray:
    """0-based indices of central stops.

    Stop ``i`` (1-based) is central when ``ceil(lo*N) <= i <= floor(hi*N)``.
    """
    lo, hi = band
    first = math.ceil(lo * n_stops - 1e-12)
    last = math.floor(hi * n_stops + 1e-12)
    first = max(first, 1)
    last = min(last, n_stops)
    if last < first:
        raise EmptyMaskError(
            f"central band {band} selects no stop for N={n_stops}"
        )
    return np.arange(first - 1, last)


def central_mask(n_stops: int, band: tuple[float, float] = DEFAULT_BAND) -> np.ndarray:
    sel = np.zeros(n_stops, dtype=bool)
    sel[central_indices(n_stops, band)] = True
    return sel[:, None] & sel[None, :]


def _raw_term(term: NoiseTerm, shares: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = shares.shape[0]
    sigma, dist = term.amplitude, term.distribution
    if term.kind == "additive":
        return _xi(rng, sigma, dist, (n, n))
    if term.kind == "multiplicative":
        return _xi(rng, sigma, dist, (n, n)) * shares
    if term.kind == "short_od":
        mask = short_mask(n, term.short_radius)
        xi = _xi(rng, sigma, dist, (n, n))
        if term.positive_only:
            xi = np.abs(xi)
        return np.where(mask, xi, 0.0)
    if term.kind == "central_od":
        mask = central_mask(n, term.central_band)
        return np.where(mask, _xi(rng, sigma, dist, (n, n)), 0.0)
    if term.kind == "boarding":
        return np.repeat(_xi(rng, sigma, dist, n)[:, None], n, axis=1)
    if term.kind == "alighting":
        return np.repeat(_xi(rng, sigma, dist, n)[None, :], n, axis=0)
    raise AssertionError(term.kind)


def term_delta(term: NoiseTerm, ref: ODShareMatrix, rng: np.random.Generator) -> np.ndarray:
    """Zero-sum error array for one term (no validation of its range)."""
    return _recentre(_raw_term(term, ref.shares, rng))


def draw_additive(ref, sigma, distribution="uniform_symmetric", rng=None) -> DeltaMatrix:
    return DeltaMatrix(term_delta(NoiseTerm("additive", sigma, distribution), ref, _rng(rng)))


def draw_multiplicative(ref, sigma, distribution="uniform_symmetric", rng=None) -> DeltaMatrix:
    return DeltaMatrix(
        term_delta(NoiseTerm("multiplicative", sigma, distribution), ref, _rng(rng))
    )


def draw_structured(
    ref,
    kind: str,
    sigma: float,
    distribution: str = "uniform_symmetric",
    rng=None,
    *,
    short_radius: int = 2,
    central_band: tuple[float, float] = DEFAULT_BAND,
    positive_only: bool = False,
) -> DeltaMatrix:
    if kind not in ("short_od", "central_od"):
        raise ODNoiseError(f"structured noise kind must be short_od or central_od, got {kind!r}")
    term = NoiseTerm(kind, sigma, distribution, short_radius, central_band, positive_only)
    return DeltaMatrix(term_delta(term, ref, _rng(rng)))


def draw_marginal(ref, side: str, sigma: float, distribution="uniform_symmetric", rng=None) -> DeltaMatrix:
    if side not in ("boarding", "alighting"):
        raise ODNoiseError(f"side must be boarding or alighting, got {side!r}")
    return DeltaMatrix(term_delta(NoiseTerm(side, sigma, distribution), ref, _rng(rng)))


def _rng(rng) -> np.random.Generator:
    if rng is None:
        raise ODNoiseError("an explicit random generator is required")
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(int(rng))


def perturb_array(spec: NoiseSpec, shares: np.ndarray, rng: np.random.Generator):
    """Perturbed share array and clamp-event count; the hot path used by sweeps."""
    est = shares.copy()
    # one stream, consumed term by term in spec order
    for term in spec.terms:
        est += _recentre(_raw_term(term, shares, rng))
    events = 0
    if spec.clamped:
        est, events, it = _kernels.clamp_nonnegative(est)
        if it < 0:
            raise ClampError(
                f"clamping did not converge within {_kernels.CLAMP_MAX_ITER} iterations"
            )
    est /= est.sum()
    return est, events


def apply(spec: NoiseSpec, ref: ODShareMatrix, seed: Optional[int] = None):
    """Perturb ``ref`` with every term of ``spec``.

    Returns ``(estimate, realization)``. ``seed`` overrides ``spec.seed``.
    """
    seed_used = spec.seed if seed is None else int(seed)
    rng = make_rng(seed_used)
    est, events = perturb_array(spec, ref.shares, rng)
    signed = bool(est.min() < 0.0 or est.max() > 1.0)
    estimate = ODShareMatrix(est, ref.labels, signed=signed)
    realization = NoiseRealization(DeltaMatrix(est - ref.shares, bounded=not signed), events, seed_used)
    return estimate, realization


# ---------------------------------------------------------------------------
# plain-text form
#
#   noise clamped=<true|false> seed=<int>
#   term <kind> sigma=<float> dist=<distribution> [radius=<int>] [band=<lo>,<hi>] [positive_only=<bool>]


def _fmt(x: float) -> str:
    return repr(float(x))


def spec_to_text(spec: NoiseSpec) -> str:
    lines = [f"noise clamped={'true' if spec.clamped else 'false'} seed={int(spec.seed)}"]
    for t in spec.terms:
        parts = ["term", t.kind, f"sigma={_fmt(t.amplitude)}", f"dist={t.distribution}"]
        if t.kind == "short_od":
            parts.append(f"radius={t.short_radius}")
            parts.append(f"positive_only={'true' if t.positive_only else 'false'}")
        if t.kind == "central_od":
            parts.append(f"band={_fmt(t.central_band[0])},{_fmt(t.central_band[1])}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_bool(s: str, lineno: int) -> bool:
    if s in ("true", "1"):
        return True
    if s in ("false", "0"):
        return False
    raise FormatError(f"expected true/false, got {s!r}", line=lineno)


def spec_from_text(text: str) -> NoiseSpec:
    header = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            opts = dict(w.split("=", 1) for w in words[2 if words[0] == "term" else 1:])
        except ValueError:
            raise FormatError(f"malformed key=value pair in {raw!r}", line=lineno) from None
        try:
            if words[0] == "noise":
                if header is not None:
                    raise FormatError("duplicate noise header", line=lineno)
                unknown = set(opts) - {"clamped", "seed"}
                if unknown:
                    raise FormatError(f"unknown keys {sorted(unknown)}", line=lineno)
                header = (_parse_bool(opts.get("clamped", "false"), lineno), int(opts.get("seed", "0")))
            elif words[0] == "term":
                if len(words) < 2:
                    raise FormatError("term line needs a kind", line=lineno)
                unknown = set(opts) - {"sigma", "dist", "radius", "band", "positive_only"}
                if unknown:
                    raise FormatError(f"unknown keys {sorted(unknown)}", line=lineno)
                kw = {}
                if "radius" in opts:
                    kw["short_radius"] = int(opts["radius"])
                if "band" in opts:
                    lo, hi = opts["band"].split(",")
                    kw["central_band"] = (float(lo), float(hi))
                if "positive_only" in opts:
                    kw["positive_only"] = _parse_bool(opts["positive_only"], lineno)
                terms.append(
                    NoiseTerm(
                        words[1],
                        float(opts["sigma"]),
                        opts.get("dist", "uniform_symmetric"),
                        **kw,
                    )
                )
            else:
                raise FormatError(f"unexpected line start {words[0]!r}", line=lineno)
        except KeyError as exc:
            raise FormatError(f"missing key {exc.args[0]!r}", line=lineno) from None
        except FormatError:
            raise
        except (ValueError, ODNoiseError) as exc:
            raise FormatError(str(exc), line=lineno) from None
    if header is None:
        raise FormatError("missing 'noise' header line")
    return NoiseSpec(tuple(terms), *header)


def composite(terms: Iterable[NoiseTerm], clamped: bool = False, seed: int = 0) -> NoiseSpec:
    return NoiseSpec(tuple(terms), clamped, seed)


def asymmetric_spec(seed: int = 0) -> NoiseSpec:
    """Boarding 0.03 + alighting 0.045 + additive 0.1, uniform, unclamped."""
    return NoiseSpec(
        (
            NoiseTerm("boarding", 0.03),
            NoiseTerm("alighting", 0.045),
            NoiseTerm("additive", 0.1),
        ),
        clamped=False,
        seed=seed,
    )
