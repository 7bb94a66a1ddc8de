"""Regenerate the files under tests/fixtures/.

The golden delta is computed with plain ``csv`` + float arithmetic, not with
odnoise, so the package's own subtraction is checked against it.
Run from the repository root: ``python scripts/make_fixtures.py``.
"""
import csv
import json
from pathlib import Path

from odnoise import NoiseSpec, NoiseTerm, ODShareMatrix, apply, error_summary, delta, generate_uniform
from odnoise.formats import counts_to_csv, write_matrix, CountShares, spec_to_json
from odnoise.plot import RatioPlot, render_svg, plot_data_csv

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def labelled(m, prefix="S"):
    return ODShareMatrix(m.shares, tuple(f"{prefix}{k + 1:02d}" for k in range(m.n_stops)), m.signed)


def read_plain(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0][1:], [[float(v) for v in r[1:]] for r in rows[1:]]


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    # small pair + golden delta
    ref = labelled(generate_uniform(6, 606))
    spec = NoiseSpec((NoiseTerm("additive", 0.002),), clamped=True, seed=7)
    est, _ = apply(spec, ref)
    write_matrix(OUT / "small_reference.csv", ref)
    write_matrix(OUT / "small_estimate.csv", est)
    labels, r = read_plain(OUT / "small_reference.csv")
    _, e = read_plain(OUT / "small_estimate.csv")
    with open(OUT / "small_delta.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + labels)
        for lab, rr, ee in zip(labels, r, e):
            w.writerow([lab] + [repr(b - a) for a, b in zip(rr, ee)])

    # perturb golden: JSON spec applied to the small reference
    pspec = NoiseSpec(
        (NoiseTerm("boarding", 0.001), NoiseTerm("alighting", 0.0015), NoiseTerm("additive", 0.003)),
        clamped=True,
        seed=42,
    )
    (OUT / "perturb_spec.json").write_text(json.dumps({"noise": spec_to_json(pspec)}, indent=2) + "\n")
    pest, _ = apply(pspec, ref)
    write_matrix(OUT / "perturb_golden.csv", pest)

    # 27-stop pair whose errors round to 0.0023 / 0.018 / 0.026
    t3ref = labelled(generate_uniform(27, 2701))
    t3spec = NoiseSpec(
        (NoiseTerm("boarding", 0.0018), NoiseTerm("alighting", 0.0044), NoiseTerm("additive", 0.007)),
        clamped=True,
        seed=0,
    )
    t3est, _ = apply(t3spec, t3ref)
    s = error_summary(delta(t3ref, t3est))
    assert (round(s.err_od, 4), round(s.err_in, 3), round(s.err_out, 3)) == (0.0023, 0.018, 0.026), s
    write_matrix(OUT / "t3_like_reference.csv", t3ref)
    write_matrix(OUT / "t3_like_estimate.csv", t3est)
    (OUT / "t3_like_spec.txt").write_text(t3spec.to_text())
    (OUT / "t3_like_counts.csv").write_text(
        counts_to_csv(CountShares(t3ref.labels, t3ref.boarding, t3ref.alighting))
    )

    # golden SVG from a tiny hand-written sweep
    sweep = OUT / "tiny_sweep.csv"
    sweep.write_text(
        "n_stops,mean_ratio_in,mean_ratio_out\n"
        "4,1.7,1.75\n9,2.8,2.9\n16,3.9,3.85\n25,4.9,5.0\n"
    )
    emp = OUT / "tiny_empirical.csv"
    emp.write_text("label,n_stops,ratio_in,ratio_out\nA,15,6.5,8.0\nB,27,8.08,11.25\n")
    p = RatioPlot(
        sweep_n=[4, 9, 16, 25], sweep_in=[1.7, 2.8, 3.9, 4.9], sweep_out=[1.75, 2.9, 3.85, 5.0],
        empirical_n=[15, 27], empirical_in=[6.5, 8.08], empirical_out=[8.0, 11.25],
    )
    (OUT / "tiny_report.svg").write_text(render_svg(p))
    (OUT / "tiny_report.csv").write_text(plot_data_csv(p))
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
