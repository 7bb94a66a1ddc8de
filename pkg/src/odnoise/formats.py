"""CSV/JSON/text file formats. Byte-level layouts are documented in docs/formats.md."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .core import SUM_TOL, ErrorSummary, ODShareMatrix
from .errors import FormatError, InvalidMatrixError, ODNoiseError
from .experiment import AggregationResult, SweepConfig, SweepResult
from .noise import DISTRIBUTIONS, KINDS, NoiseSpec, NoiseTerm, spec_from_text, spec_to_text
from .regress import LowessModel

log = logging.getLogger(__name__)

NULL = "null"
COUNTS_TOL = 1e-6


def fmt_float(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NULL
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path) from None


def _data_rows(text: str, path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment CSV lines."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            fields = next(csv.reader([line]))
        except csv.Error as exc:
            raise FormatError(str(exc), path, lineno) from None
        yield lineno, [f.strip() for f in fields]


def _float(s: str, path, lineno: int, allow_null: bool = False) -> float:
    if allow_null and s == NULL:
        return math.nan
    try:
        v = float(s)
    except ValueError:
        raise FormatError(f"not a number: {s!r}", path, lineno) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite value {s!r}", path, lineno)
    return v


# ---------------------------------------------------------------------------
# O-D matrices


def matrix_to_csv(m: ODShareMatrix) -> str:
    labels = m.labels or tuple(str(i + 1) for i in range(m.n_stops))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(labels))
    for lab, row in zip(labels, m.shares):
        w.writerow([lab] + [repr(float(v)) for v in row])
    return buf.getvalue()


def write_matrix(path, m: ODShareMatrix) -> None:
    atomic_write_text(path, matrix_to_csv(m))


def parse_matrix(text: str, path=None, allow_signed: bool = False) -> ODShareMatrix:
    """Parse a labelled square CSV matrix.

    Nonnegative matrices that do not sum to one are taken as trip counts and
    normalized with a warning. Negative cells are accepted only with
    ``allow_signed`` and a unit sum (unclamped synthetic estimates).
    """
    rows = list(_data_rows(text, path))
    if not rows:
        raise FormatError("empty matrix file", path)
    head_line, header = rows[0]
    labels = header[1:]
    n = len(labels)
    if n < 2:
        raise FormatError("need at least 2 stop labels in the header row", path, head_line)
    if len(set(labels)) != n:
        raise FormatError("duplicate stop labels in header", path, head_line)
    body = rows[1:]
    if len(body) != n:
        line = body[-1][0] if body else head_line
        raise FormatError(f"expected {n} data rows, found {len(body)}", path, line)
    values = np.empty((n, n))
    for k, (lineno, fields) in enumerate(body):
        if len(fields) != n + 1:
            raise FormatError(f"expected {n + 1} fields, found {len(fields)}", path, lineno)
        if fields[0] != labels[k]:
            raise FormatError(
                f"row label {fields[0]!r} does not match column label {labels[k]!r}", path, lineno
            )
        values[k] = [_float(s, path, lineno) for s in fields[1:]]
    total = float(values.sum())
    negative = bool(values.min() < 0)
    if negative:
        if not allow_signed:
            raise FormatError("matrix has negative entries", path)
        if abs(total - 1.0) > SUM_TOL:
            raise FormatError(f"signed share matrix sums to {total!r}, not 1", path)
    elif abs(total - 1.0) > SUM_TOL:
        if total <= 0:
            raise FormatError("matrix has no positive entries", path)
        log.warning("%s: entries sum to %g, treating them as counts and normalizing", path or "matrix", total)
        values = values / total
    try:
        return ODShareMatrix(values, tuple(labels), signed=negative)
    except InvalidMatrixError as exc:
        raise FormatError(str(exc), path) from None


def read_matrix(path, allow_signed: bool = False) -> ODShareMatrix:
    return parse_matrix(_read_text(path), path, allow_signed)


# ---------------------------------------------------------------------------
# boarding/alighting count shares

COUNTS_HEADER = ["stop_label", "boarding_share", "alighting_share"]


@dataclass(frozen=True, eq=False)
class CountShares:
    labels: tuple[str, ...]
    boarding: np.ndarray
    alighting: np.ndarray

    def aligned_to(self, m: ODShareMatrix) -> tuple[np.ndarray, np.ndarray]:
        """Boarding and alighting shares ordered like the matrix's stops."""
        if m.labels is None:
            if len(self.labels) != m.n_stops:
                raise ODNoiseError(f"counts cover {len(self.labels)} stops, matrix has {m.n_stops}")
            return self.boarding, self.alighting
        if set(m.labels) != set(self.labels) or len(self.labels) != m.n_stops:
            raise ODNoiseError("counts stop labels do not match the matrix labels")
        pos = {lab: k for k, lab in enumerate(self.labels)}
        idx = [pos[lab] for lab in m.labels]
        return self.boarding[idx], self.alighting[idx]


def parse_counts(text: str, path=None) -> CountShares:
    rows = list(_data_rows(text, path))
    if not rows:
        raise FormatError("empty counts file", path)
    head_line, header = rows[0]
    if header != COUNTS_HEADER:
        raise FormatError(f"expected header {','.join(COUNTS_HEADER)}", path, head_line)
    labels, b, a = [], [], []
    for lineno, fields in rows[1:]:
        if len(fields) != 3:
            raise FormatError(f"expected 3 fields, found {len(fields)}", path, lineno)
        labels.append(fields[0])
        b.append(_float(fields[1], path, lineno))
        a.append(_float(fields[2], path, lineno))
    if len(labels) < 2:
        raise FormatError("counts file needs at least 2 stops", path)
    if len(set(labels)) != len(labels):
        raise FormatError("duplicate stop labels", path)
    b, a = np.array(b), np.array(a)
    for name, col in (("boarding_share", b), ("alighting_share", a)):
        if col.min() < 0:
            raise FormatError(f"{name} has negative entries", path)
        if abs(col.sum() - 1.0) > COUNTS_TOL:
            raise FormatError(f"{name} sums to {col.sum()!r}, not 1 within {COUNTS_TOL}", path)
    return CountShares(tuple(labels), b, a)


def read_counts(path) -> CountShares:
    return parse_counts(_read_text(path), path)


def counts_to_csv(c: CountShares) -> str:
    lines = [",".join(COUNTS_HEADER)]
    for lab, b, a in zip(c.labels, c.boarding, c.alighting):
        lines.append(f"{lab},{fmt_float(b)},{fmt_float(a)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run configuration (JSON)

_TERM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "amplitude"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "amplitude": {"type": "number", "exclusiveMinimum": 0},
        "distribution": {"enum": list(DISTRIBUTIONS)},
        "short_radius": {"type": "integer", "minimum": 0},
        "central_band": {
            "type": "array",
            "items": {"type": "number", "minimum": 0, "maximum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "positive_only": {"type": "boolean"},
    },
}

_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["noise"],
    "properties": {
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["terms"],
            "properties": {
                "terms": {"type": "array", "minItems": 1, "items": _TERM_SCHEMA},
                "clamped": {"type": "boolean"},
                "seed": _SEED,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_values": {
                    "oneOf": [
                        {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["start", "stop"],
                            "properties": {
                                "start": {"type": "integer", "minimum": 2},
                                "stop": {"type": "integer", "minimum": 2},
                                "step": {"type": "integer", "minimum": 1},
                            },
                        },
                    ]
                },
                "replicates": {"type": "integer", "minimum": 1},
                "reference": {
                    "oneOf": [
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["type"],
                            "properties": {"type": {"const": "synthetic"}, "seed": _SEED},
                        },
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["type", "path"],
                            "properties": {"type": {"const": "provided"}, "path": {"type": "string"}},
                        },
                    ]
                },
                "averaging": {"enum": ["mean_of_ratios", "ratio_of_mean_errors"]},
                "per_replicate_reference": {"type": "boolean"},
                "seed": _SEED,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sweep_csv": {"type": "string"},
                "estimate_csv": {"type": "string"},
                "model_csv": {"type": "string"},
                "report": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    spec: NoiseSpec
    sweep: Optional[dict]
    outputs: dict
    base_dir: Path

    def sweep_config(self, seed_override: Optional[int] = None) -> SweepConfig:
        s = dict(self.sweep or {})
        nv = s.get("n_values", {"start": 2, "stop": 100})
        if isinstance(nv, dict):
            nv = range(nv["start"], nv["stop"] + 1, nv.get("step", 1))
        ref = s.get("reference", {"type": "synthetic"})
        reference, ref_seed = None, 0
        if ref["type"] == "provided":
            p = Path(ref["path"])
            reference = read_matrix(p if p.is_absolute() else self.base_dir / p)
        else:
            ref_seed = ref.get("seed", 0)
        seed = seed_override if seed_override is not None else s.get("seed")
        kw = dict(
            replicates=s.get("replicates", 10),
            averaging=s.get("averaging", "mean_of_ratios"),
            per_replicate_reference=s.get("per_replicate_reference", False),
            seed=seed,
        )
        if reference is not None:
            if "n_values" in s and list(nv) != [reference.n_stops]:
                raise ODNoiseError(
                    f"provided reference has N={reference.n_stops} but n_values={list(nv)}"
                )
            return SweepConfig.for_reference(self.spec, reference, **kw)
        return SweepConfig(self.spec, n_values=tuple(nv), reference_seed=ref_seed, **kw)


def spec_from_json(doc: dict) -> NoiseSpec:
    terms = []
    for t in doc["terms"]:
        kw = {k: t[k] for k in ("distribution", "short_radius", "positive_only") if k in t}
        if "central_band" in t:
            kw["central_band"] = tuple(t["central_band"])
        terms.append(NoiseTerm(t["kind"], t["amplitude"], **kw))
    return NoiseSpec(tuple(terms), doc.get("clamped", False), doc.get("seed", 0))


def spec_to_json(spec: NoiseSpec) -> dict:
    terms = []
    for t in spec.terms:
        d = {"kind": t.kind, "amplitude": t.amplitude, "distribution": t.distribution}
        if t.kind == "short_od":
            d["short_radius"] = t.short_radius
            d["positive_only"] = t.positive_only
        if t.kind == "central_od":
            d["central_band"] = list(t.central_band)
        terms.append(d)
    return {"terms": terms, "clamped": spec.clamped, "seed": spec.seed}


def parse_run_config(text: str, path=None) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    try:
        jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FormatError(f"config invalid at {where}: {exc.message}", path) from None
    base = Path(path).parent if path is not None else Path(".")
    try:
        spec = spec_from_json(doc["noise"])
    except ODNoiseError as exc:
        raise FormatError(str(exc), path) from None
    return RunConfig(spec, doc.get("sweep"), doc.get("outputs", {}), base)


def read_run_config(path) -> RunConfig:
    """Load a JSON run config, or a plain-text noise spec (no sweep section)."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return parse_run_config(text, path)
    return RunConfig(spec_from_text(text), None, {}, Path(path).parent)


def write_spec_text(path, spec: NoiseSpec) -> None:
    atomic_write_text(path, spec_to_text(spec))


# ---------------------------------------------------------------------------
# sweep results

SWEEP_COLUMNS = [
    "n_stops",
    "mean_ratio_in",
    "std_ratio_in",
    "sem_ratio_in",
    "mean_ratio_out",
    "std_ratio_out",
    "sem_ratio_out",
    "mean_err_od",
    "replicates",
]


def sweep_to_csv(result: SweepResult) -> str:
    cfg = result.config
    lines = ["# odnoise sweep"]
    lines += ["# " + ln for ln in spec_to_text(cfg.spec).splitlines()]
    ref = "provided" if cfg.reference is not None else f"synthetic seed={cfg.reference_seed}"
    lines.append(
        f"# master_seed={cfg.master_seed} reference={ref} averaging={cfg.averaging} "
        f"per_replicate_reference={'true' if cfg.per_replicate_reference else 'false'}"
    )
    lines.append(",".join(SWEEP_COLUMNS))
    for k, n in enumerate(result.n_values):
        vals = [
            result.mean_ratio_in[k],
            result.std_ratio_in[k],
            result.sem_ratio_in[k],
            result.mean_ratio_out[k],
            result.std_ratio_out[k],
            result.sem_ratio_out[k],
            result.mean_err_od[k],
        ]
        lines.append(",".join([str(int(n))] + [fmt_float(v) for v in vals] + [str(result.replicates)]))
    return "\n".join(lines) + "\n"


def parse_table(text: str, path=None, required=()) -> dict[str, np.ndarray]:
    """Parse a headed numeric CSV into columns; ``null`` cells become NaN.

    The column ``label`` (if present) is kept as strings.
    """
    rows = list(_data_rows(text, path))
    if not rows:
        raise FormatError("empty table", path)
    head_line, header = rows[0]
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"missing columns {missing}", path, head_line)
    cols: dict[str, list] = {h: [] for h in header}
    for lineno, fields in rows[1:]:
        if len(fields) != len(header):
            raise FormatError(f"expected {len(header)} fields, found {len(fields)}", path, lineno)
        for h, f in zip(header, fields):
            cols[h].append(f if h in ("label", "series", "side") else _float(f, path, lineno, allow_null=True))
    return {h: (np.array(v, dtype=object) if h in ("label", "series", "side") else np.array(v, dtype=float)) for h, v in cols.items()}


def read_table(path, required=()) -> dict[str, np.ndarray]:
    return parse_table(_read_text(path), path, required)


# ---------------------------------------------------------------------------
# Lowess models


def model_to_csv(model: LowessModel) -> str:
    lines = [f"# lowess frac={fmt_float(model.frac)} side={model.side}", "n_stops,ratio"]
    for n, r in zip(model.knots_n, model.knots_ratio):
        lines.append(f"{fmt_float(n)},{fmt_float(r)}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, path=None) -> LowessModel:
    first = text.splitlines()[0] if text else ""
    parts = first.lstrip("#").split()
    if not first.startswith("#") or not parts or parts[0] != "lowess":
        raise FormatError("expected '# lowess frac=<f> side=<side>' header", path, 1)
    try:
        opts = dict(p.split("=", 1) for p in parts[1:])
        frac = float(opts["frac"])
        side = opts["side"]
    except (ValueError, KeyError):
        raise FormatError("malformed lowess header", path, 1) from None
    cols = parse_table(text, path, required=("n_stops", "ratio"))
    try:
        return LowessModel(cols["n_stops"], cols["ratio"], frac, side)
    except ODNoiseError as exc:
        raise FormatError(str(exc), path) from None


def read_model(path) -> LowessModel:
    return parse_model(_read_text(path), path)


# ---------------------------------------------------------------------------
# metrics and aggregation tables

METRICS_COLUMNS = ["label", "n_stops", "err_od", "err_in", "err_out", "ratio_in", "ratio_out"]


def metrics_row(label: str, n_stops: int, s: ErrorSummary) -> str:
    vals = [s.err_od, s.err_in, s.err_out, s.ratio_in, s.ratio_out]
    return ",".join([label, str(n_stops)] + [fmt_float(v) for v in vals])


def metrics_to_csv(rows: list[tuple[str, int, ErrorSummary]]) -> str:
    return "\n".join([",".join(METRICS_COLUMNS)] + [metrics_row(*r) for r in rows]) + "\n"


def aggregation_to_csv(result: AggregationResult) -> str:
    lines = [
        f"# odnoise aggregation n_stops={result.n_stops} replicates={result.boarding.shape[1]}",
        "n,boarding_mean,boarding_sem,alighting_mean,alighting_sem,gap,gap_sem",
    ]
    bm, bs = result.mean("boarding"), result.sem("boarding")
    am, as_ = result.mean("alighting"), result.sem("alighting")
    gap, gs = result.gap(), result.gap_sem()
    for k, n in enumerate(result.sizes):
        vals = [bm[k], bs[k], am[k], as_[k], gap[k], gs[k]]
        lines.append(",".join([str(int(n))] + [fmt_float(v) for v in vals]))
    return "\n".join(lines) + "\n"
