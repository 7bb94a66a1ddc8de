import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odnoise import FormatError, NoiseSpec, NoiseTerm, SweepConfig, fit_lowess, generate_uniform, run_sweep
from odnoise.formats import (
    CountShares,
    counts_to_csv,
    matrix_to_csv,
    model_to_csv,
    parse_counts,
    parse_matrix,
    parse_model,
    parse_run_config,
    parse_table,
    read_run_config,
    spec_from_json,
    spec_to_json,
    sweep_to_csv,
)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 15), seed=st.integers(0, 2**32))
def test_matrix_round_trip_lossless(n, seed):
    m = generate_uniform(n, seed)
    back = parse_matrix(matrix_to_csv(m))
    np.testing.assert_array_equal(back.shares, m.shares)


def test_matrix_labels_kept():
    text = ",A,B\nA,0.25,0.25\nB,0.5,0\n"
    m = parse_matrix(text)
    assert m.labels == ("A", "B")
    assert parse_matrix(matrix_to_csv(m)) == m


def test_counts_matrix_normalized_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        m = parse_matrix(",A,B\nA,10,30\nB,40,20\n")
    assert "normaliz" in caplog.text
    np.testing.assert_allclose(m.shares, [[0.1, 0.3], [0.4, 0.2]])


def test_matrix_errors_have_line_numbers():
    with pytest.raises(FormatError, match="line 3|:3"):
        parse_matrix(",A,B\nA,0.5,0.25\nB,x,0.25\n")
    with pytest.raises(FormatError, match="3"):
        parse_matrix(",A,B\nA,0.5,0.25\nC,0.25,0\n")
    with pytest.raises(FormatError):
        parse_matrix(",A,B\nA,0.5,0.5\n")
    with pytest.raises(FormatError, match="negative"):
        parse_matrix(",A,B\nA,0.6,0.5\nB,-0.1,0\n")
    signed = parse_matrix(",A,B\nA,0.6,0.5\nB,-0.1,0\n", allow_signed=True)
    assert signed.signed


def test_counts_file():
    c = parse_counts("stop_label,boarding_share,alighting_share\nA,0.4,0.5\nB,0.6,0.5\n")
    assert c.labels == ("A", "B")
    back = parse_counts(counts_to_csv(c))
    np.testing.assert_array_equal(back.boarding, c.boarding)
    with pytest.raises(FormatError, match="boarding_share"):
        parse_counts("stop_label,boarding_share,alighting_share\nA,0.4,0.5\nB,0.5,0.5\n")
    with pytest.raises(FormatError, match="header"):
        parse_counts("stop,b,a\nA,0.4,0.5\n")


def test_counts_alignment_by_label():
    m = parse_matrix(",A,B\nA,0.25,0.25\nB,0.5,0\n")
    c = CountShares(("B", "A"), np.array([0.5, 0.5]), np.array([0.25, 0.75]))
    b, a = c.aligned_to(m)
    np.testing.assert_array_equal(a, [0.75, 0.25])


def _config(**extra):
    doc = {"noise": {"terms": [{"kind": "additive", "amplitude": 0.1}], "seed": 3}}
    doc.update(extra)
    return json.dumps(doc)


def test_run_config_parses_and_rejects_unknown_keys():
    cfg = parse_run_config(_config(sweep={"n_values": [3, 4], "replicates": 2}))
    sc = cfg.sweep_config()
    assert sc.n_values == (3, 4) and sc.replicates == 2 and sc.master_seed == 3
    with pytest.raises(FormatError, match="bogus|Additional"):
        parse_run_config(_config(bogus=1))
    with pytest.raises(FormatError):
        parse_run_config(json.dumps({"noise": {"terms": [{"kind": "additive", "amplitude": -1}]}}))
    with pytest.raises(FormatError, match="line"):
        parse_run_config("{\n  nope\n}")


def test_run_config_range_and_provided(tmp_path):
    cfg = parse_run_config(_config(sweep={"n_values": {"start": 2, "stop": 10, "step": 4}}))
    assert cfg.sweep_config().n_values == (2, 6, 10)
    (tmp_path / "ref.csv").write_text(matrix_to_csv(generate_uniform(5, 0)))
    (tmp_path / "c.json").write_text(_config(sweep={"reference": {"type": "provided", "path": "ref.csv"}}))
    sc = read_run_config(tmp_path / "c.json").sweep_config()
    assert sc.n_values == (5,) and sc.reference is not None


def test_spec_json_round_trip():
    spec = NoiseSpec(
        (NoiseTerm("short_od", 0.1, short_radius=1), NoiseTerm("central_od", 0.2, "gaussian", central_band=(0.1, 0.9))),
        clamped=True,
        seed=9,
    )
    assert spec_from_json(spec_to_json(spec)) == spec


def test_text_spec_as_config(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text(NoiseSpec((NoiseTerm("additive", 0.1),), seed=4).to_text())
    assert read_run_config(p).spec.seed == 4


def test_sweep_csv_and_model_round_trip():
    res = run_sweep(SweepConfig(NoiseSpec((NoiseTerm("additive", 0.1),)), n_values=(3, 4, 5, 6), replicates=3))
    cols = parse_table(sweep_to_csv(res), required=("n_stops", "mean_ratio_in"))
    np.testing.assert_array_equal(cols["mean_ratio_in"], res.mean_ratio_in)
    model = fit_lowess(zip(cols["n_stops"], cols["mean_ratio_in"]), frac=1.0)
    back = parse_model(model_to_csv(model))
    np.testing.assert_array_equal(back.knots_ratio, model.knots_ratio)
    assert (back.frac, back.side) == (1.0, "boarding")


def test_table_null_and_line_errors():
    cols = parse_table("label,n_stops,ratio_in\nA,3,null\n")
    assert np.isnan(cols["ratio_in"][0])
    with pytest.raises(FormatError, match=":3|line 3"):
        parse_table("n_stops,ratio\n3,1.0\n4\n", path="x.csv")
