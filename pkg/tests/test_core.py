import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odnoise import (
    ConsistencyError,
    DeltaMatrix,
    ErrorSummary,
    InvalidMatrixError,
    ODShareMatrix,
    ShapeMismatchError,
    compare,
    delta,
    error_summary,
    generate_uniform,
)
from odnoise.formats import read_matrix

from oracles import read_csv_matrix, rms_by_hand


def test_matrix_invariants():
    with pytest.raises(InvalidMatrixError):
        ODShareMatrix([[0.5, 0.5], [0.1, 0.0]])
    with pytest.raises(InvalidMatrixError):
        ODShareMatrix([[1.0]])
    with pytest.raises(InvalidMatrixError):
        ODShareMatrix([[1.2, -0.2], [0.0, 0.0]])
    m = ODShareMatrix([[1.2, -0.2], [0.0, 0.0]], signed=True)
    assert m.has_negative


def test_marginals_are_derived():
    m = ODShareMatrix([[0.1, 0.2], [0.3, 0.4]])
    np.testing.assert_allclose(m.boarding, [0.3, 0.7])
    np.testing.assert_allclose(m.alighting, [0.4, 0.6])
    assert m.mass_below_diagonal() == pytest.approx(0.3)


def test_delta_identity_is_zero():
    m = generate_uniform(5, 1)
    d = delta(m, m)
    assert np.all(d.deltas == 0.0)


def test_delta_hand_example():
    ref = ODShareMatrix([[0.5, 0.5], [0.0, 0.0]])
    est = ODShareMatrix([[0.4, 0.6], [0.0, 0.0]])
    np.testing.assert_allclose(delta(ref, est).deltas, [[-0.1, 0.1], [0.0, 0.0]], atol=1e-15)


def test_delta_dimension_mismatch_names_both():
    with pytest.raises(ShapeMismatchError, match="N=3.*N=4"):
        delta(generate_uniform(3, 0), generate_uniform(4, 0))


def test_delta_matches_golden_fixture(fixtures_dir):
    ref = read_matrix(fixtures_dir / "small_reference.csv")
    est = read_matrix(fixtures_dir / "small_estimate.csv")
    _, golden = read_csv_matrix(fixtures_dir / "small_delta.csv")
    np.testing.assert_array_equal(delta(ref, est).deltas, np.array(golden))


def test_zero_delta_summary_has_undefined_ratios():
    s = error_summary(DeltaMatrix.zeros(4))
    assert (s.err_od, s.err_in, s.err_out) == (0.0, 0.0, 0.0)
    assert s.ratio_in is None and s.ratio_out is None
    assert not s.defined


def test_single_entry_closed_form():
    # +0.09 at (1, 2), recentred over the 9 cells
    raw = np.zeros((3, 3))
    raw[1, 2] = 0.09
    d = raw - raw.mean()
    s = error_summary(DeltaMatrix(d))
    # closed form: entries 0.08 once and -0.01 eight times
    err = math.sqrt((0.08**2 + 8 * 0.01**2) / 9)
    # row sums: row 1 is 0.09 - 0.03 = 0.06, others -0.03
    err_in = math.sqrt((0.06**2 + 2 * 0.03**2) / 3)
    assert s.err_od == pytest.approx(err, rel=1e-12)
    assert s.err_in == pytest.approx(err_in, rel=1e-12)
    assert s.err_out == pytest.approx(err_in, rel=1e-12)
    assert (s.err_od, s.err_in, s.err_out) == pytest.approx(rms_by_hand(d.tolist()), rel=1e-12)


def test_inconsistent_zero_error_flagged():
    with pytest.raises(ConsistencyError):
        ErrorSummary.from_errors(0.0, 0.1, 0.0)


def test_row_constant_delta_closed_form():
    c = np.array([0.03, -0.01, -0.02, 0.0, 0.0])
    d = np.repeat(c[:, None], 5, axis=1)
    s = error_summary(DeltaMatrix(d))
    assert s.err_out <= 1e-12
    assert s.ratio_in == pytest.approx(5.0, rel=1e-12)


def test_counts_baseline_replaces_marginals():
    ref = generate_uniform(4, 3)
    est = generate_uniform(4, 4)
    same = compare(ref, est, (ref.boarding, ref.alighting))
    plain = compare(ref, est)
    assert same.err_in == pytest.approx(plain.err_in, rel=1e-12)
    assert same.err_out == pytest.approx(plain.err_out, rel=1e-12)
    shifted = compare(ref, est, (np.full(4, 0.25), np.full(4, 0.25)))
    assert shifted.err_od == plain.err_od
    assert shifted.err_in != pytest.approx(plain.err_in)


@st.composite
def share_pairs(draw):
    n = draw(st.integers(2, 12))
    a = draw(st.integers(0, 2**32 - 1))
    b = draw(st.integers(0, 2**32 - 1))
    return generate_uniform(n, a), generate_uniform(n, b)


@settings(max_examples=60, deadline=None)
@given(share_pairs(), st.randoms(use_true_random=False))
def test_properties_on_random_pairs(pair, rnd):
    ref, est = pair
    d = delta(ref, est)
    assert abs(d.deltas.sum()) <= 1e-9
    s = error_summary(d)
    n = ref.n_stops
    assert s.err_in <= n * s.err_od * (1 + 1e-12)
    assert s.err_out <= n * s.err_od * (1 + 1e-12)
    perm = list(range(n))
    rnd.shuffle(perm)
    sp = error_summary(delta(ref.permuted(perm), est.permuted(perm)))
    assert sp.err_od == pytest.approx(s.err_od, rel=1e-12)
    assert sp.err_in == pytest.approx(s.err_in, rel=1e-12)
    assert sp.err_out == pytest.approx(s.err_out, rel=1e-12)
