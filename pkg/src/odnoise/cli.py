"""``odnoise`` command line.

Every command exits 0 on success. Failures print exactly one line,
``odnoise: error: <message>``, to stderr and exit 1 (bad data) or 2 (bad usage).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .core import compare
from .errors import ODNoiseError
from .experiment import aggregate_and_score, aggregation_study, run_sweep
from .formats import (
    aggregation_to_csv,
    atomic_write_text,
    metrics_row,
    metrics_to_csv,
    METRICS_COLUMNS,
    model_to_csv,
    read_counts,
    read_matrix,
    read_model,
    read_run_config,
    read_table,
    sweep_to_csv,
    write_matrix,
)
from .noise import apply
from .plot import RatioPlot, plot_data_csv, render_svg
from .regress import fit_lowess, infer_od_error, predict_ratio
from .seeding import SEED_ENV, resolve_seed
from .synth import generate_uniform

log = logging.getLogger("odnoise")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message.replace("\n", " "))


def _seed_or_env(seed):
    try:
        return resolve_seed(seed)
    except ValueError as exc:
        raise UsageError(f"{exc}; pass --seed") from None


def cmd_generate(args):
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    m = generate_uniform(args.n, _seed_or_env(args.seed))
    write_matrix(args.out, m)
    print(f"wrote {args.n}x{args.n} matrix to {args.out}")


def cmd_perturb(args):
    ref = read_matrix(args.ref)
    cfg = read_run_config(args.spec)
    spec = cfg.spec
    if args.seed is not None or os.environ.get(SEED_ENV, "").strip():
        spec = spec.with_seed(resolve_seed(args.seed))
    est, real = apply(spec, ref)
    write_matrix(args.out, est)
    print(f"wrote estimate to {args.out} (seed={real.seed_used}, clamp_events={real.clamp_events})")


def cmd_metrics(args):
    ref = read_matrix(args.ref)
    est = read_matrix(args.est, allow_signed=True)
    counts = None
    if args.counts:
        counts = read_counts(args.counts).aligned_to(est)
    s = compare(ref, est, counts)
    label = args.label or Path(args.est).stem
    row = metrics_row(label, ref.n_stops, s)
    print(",".join(METRICS_COLUMNS))
    print(row)
    if args.out:
        out = Path(args.out)
        if args.append and out.exists():
            atomic_write_text(out, out.read_text().rstrip("\n") + "\n" + row + "\n")
        else:
            atomic_write_text(out, metrics_to_csv([(label, ref.n_stops, s)]))


def cmd_sweep(args):
    cfg = read_run_config(args.spec)
    sc = cfg.sweep_config(seed_override=args.seed)
    if args.replicates is not None:
        sc = dataclasses.replace(sc, replicates=args.replicates)
    result = run_sweep(sc)
    out = args.out or cfg.outputs.get("sweep_csv")
    if not out:
        raise UsageError("no output path: pass --out or set outputs.sweep_csv")
    atomic_write_text(out, sweep_to_csv(result))
    print(f"wrote {len(result.n_values)} rows x {result.replicates} replicates to {out} [{_kernels.BACKEND}]")


def cmd_fit(args):
    cols = read_table(args.input, required=("n_stops",))
    key = None
    for cand in (f"mean_ratio_{'in' if args.side == 'boarding' else 'out'}",
                 f"ratio_{'in' if args.side == 'boarding' else 'out'}", "ratio"):
        if cand in cols:
            key = cand
            break
    if key is None:
        raise ODNoiseError(f"{args.input}: no ratio column for side {args.side}")
    n, r = cols["n_stops"], cols[key]
    ok = np.isfinite(r)
    model = fit_lowess(zip(n[ok], r[ok]), frac=args.frac, side=args.side)
    atomic_write_text(args.out, model_to_csv(model))
    print(f"wrote lowess model ({model.knots_n.size} knots, frac={args.frac}) to {args.out}")


def cmd_infer(args):
    model = read_model(args.model)
    ratio = predict_ratio(model, args.n)
    err = infer_od_error(model, args.n, args.count_error)
    print("n_stops,side,count_error,ratio,err_od")
    print(f"{args.n},{model.side},{args.count_error!r},{ratio!r},{err!r}")


def cmd_aggregate(args):
    ref = read_matrix(args.ref)
    est = read_matrix(args.est, allow_signed=True)
    err = aggregate_and_score(ref, est, args.n, args.side)
    print("n,side,err_od")
    print(f"{args.n},{args.side},{err!r}")
    if args.out:
        atomic_write_text(args.out, f"n,side,err_od\n{args.n},{args.side},{err!r}\n")


def cmd_aggregate_study(args):
    cfg = read_run_config(args.spec)
    seed = args.seed if args.seed is not None else cfg.spec.seed
    sizes = [int(s) for s in args.sizes.split(",")]
    res = aggregation_study(cfg.spec, args.n_stops, sizes, args.replicates, seed=seed)
    text = aggregation_to_csv(res)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)


def cmd_report(args):
    p = RatioPlot()
    if args.sweep:
        cols = read_table(args.sweep, required=("n_stops", "mean_ratio_in", "mean_ratio_out"))
        p.sweep_n, p.sweep_in, p.sweep_out = cols["n_stops"], cols["mean_ratio_in"], cols["mean_ratio_out"]
    if args.empirical:
        cols = read_table(args.empirical, required=("n_stops", "ratio_in", "ratio_out"))
        p.empirical_n, p.empirical_in, p.empirical_out = cols["n_stops"], cols["ratio_in"], cols["ratio_out"]
    if not (args.sweep or args.empirical):
        raise UsageError("report needs --sweep and/or --empirical")
    out = Path(args.out)
    if out.suffix.lower() == ".svg":
        atomic_write_text(out, render_svg(p))
        data = out.with_suffix(".csv")
        atomic_write_text(data, plot_data_csv(p))
        print(f"wrote {out} and {data}")
    else:
        atomic_write_text(out, plot_data_csv(p))
        print(f"wrote {out}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="odnoise", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"odnoise {__version__}")
    ap.add_argument("-q", "--quiet", action="store_true", help="suppress warnings")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic uniform share matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("perturb", help="apply a noise spec to a reference matrix")
    p.add_argument("--ref", required=True)
    p.add_argument("--spec", required=True, help="JSON run config or plain-text noise spec")
    p.add_argument("--seed", type=int, help=f"overrides ${SEED_ENV} and the noise spec's seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("metrics", help="RMS errors and ratios of an estimate")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--counts", help="boarding/alighting share CSV used as marginal baseline")
    p.add_argument("--label")
    p.add_argument("--out")
    p.add_argument("--append", action="store_true", help="append a row to --out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="Monte Carlo sweep of error ratios over N")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, help="master seed for replicate draws")
    p.add_argument("--replicates", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="Lowess fit of a ratio curve")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--frac", type=float, default=0.2)
    p.add_argument("--side", choices=("boarding", "alighting"), default="boarding")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="estimate O-D error from a count error")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--count-error", type=float, required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("aggregate", help="O-D error after bundling n stops")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--side", choices=("boarding", "alighting"), required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("aggregate-study", help="Monte Carlo comparison of aggregation sides")
    p.add_argument("--spec", required=True)
    p.add_argument("--n-stops", type=int, required=True)
    p.add_argument("--sizes", default="1,2,3,5")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate_study)

    p = sub.add_parser("report", help="plot-data CSV and optional SVG of ratios vs N")
    p.add_argument("--sweep")
    p.add_argument("--empirical", help="metrics CSV with n_stops, ratio_in, ratio_out")
    p.add_argument("--out", required=True, help="*.svg also writes a sibling .csv")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"odnoise: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="odnoise: warning: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except UsageError as exc:
        print(f"odnoise: error: {exc}", file=sys.stderr)
        return 2
    except (ODNoiseError, ValueError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"odnoise: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
