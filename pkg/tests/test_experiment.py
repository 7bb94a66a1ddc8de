import numpy as np
import pytest

from odnoise import (
    NoiseSpec,
    NoiseTerm,
    ODNoiseError,
    ShapeMismatchError,
    SweepConfig,
    aggregate_and_score,
    aggregation_study,
    apply,
    asymmetric_spec,
    compare,
    empirical_points,
    generate_uniform,
    run_sweep,
)
from odnoise.experiment import aggregate_delta
from odnoise.formats import read_matrix

ADD = NoiseSpec((NoiseTerm("additive", 0.1),), seed=1)


def test_config_validation(ref27):
    with pytest.raises(ODNoiseError):
        SweepConfig(ADD, n_values=(5, 3))
    with pytest.raises(ODNoiseError):
        SweepConfig(ADD, n_values=(1, 3))
    with pytest.raises(ODNoiseError):
        SweepConfig(ADD, replicates=0)
    with pytest.raises(ShapeMismatchError):
        SweepConfig(ADD, n_values=(10, 27), reference=ref27)


def test_sweep_shapes_and_determinism():
    cfg = SweepConfig(ADD, n_values=(3, 5, 8), replicates=4)
    a = run_sweep(cfg)
    b = run_sweep(cfg)
    assert a.err_od.shape == (3, 4)
    assert a.mean_ratio_in.shape == (3,)
    np.testing.assert_array_equal(a.err_in, b.err_in)
    assert np.all(a.mean_ratio_in > 0)
    # results for one N don't depend on which other N are swept
    c = run_sweep(SweepConfig(ADD, n_values=(5,), replicates=4))
    np.testing.assert_array_equal(c.err_in[0], a.err_in[1])


def test_sweep_matches_direct_apply():
    from odnoise.seeding import derive_seed

    cfg = SweepConfig(ADD, n_values=(6,), replicates=3, reference_seed=9)
    res = run_sweep(cfg)
    ref = generate_uniform(6, derive_seed(9, 6))
    for r in range(3):
        est, _ = apply(ADD, ref, seed=derive_seed(ADD.seed, 6, r))
        s = compare(ref, est)
        assert res.err_od[0, r] == pytest.approx(s.err_od, rel=1e-12)
        assert res.err_in[0, r] == pytest.approx(s.err_in, rel=1e-12)


def test_boarding_only_sweep_is_exactly_n():
    spec = NoiseSpec((NoiseTerm("boarding", 0.05),), seed=2)
    res = run_sweep(SweepConfig(spec, n_values=(2, 7, 30), replicates=5))
    np.testing.assert_allclose(res.mean_ratio_in, [2, 7, 30], rtol=1e-9)
    assert np.all(res.err_out <= 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("n", [16, 64])
def test_additive_sweep_sqrt_n(n):
    res = run_sweep(SweepConfig(ADD, n_values=(n,), replicates=200))
    assert res.mean_ratio_in[0] == pytest.approx(np.sqrt(n), rel=0.05)


def test_ratio_of_mean_errors_option():
    cfg = SweepConfig(ADD, n_values=(10,), replicates=20, averaging="ratio_of_mean_errors")
    res = run_sweep(cfg)
    assert res.mean_ratio_in[0] == pytest.approx(res.err_in.mean() / res.err_od.mean())


def test_per_replicate_reference_differs():
    a = run_sweep(SweepConfig(ADD, n_values=(6,), replicates=3))
    b = run_sweep(SweepConfig(ADD, n_values=(6,), replicates=3, per_replicate_reference=True))
    assert b.reference_seeds.shape == (1, 3)
    assert len(set(b.reference_seeds[0].tolist())) == 3
    assert not np.array_equal(a.err_od, b.err_od)


def test_provided_reference(ref27):
    res = run_sweep(SweepConfig.for_reference(asymmetric_spec(4), ref27, replicates=3))
    assert res.n_values.tolist() == [27]


def test_empirical_points(fixtures_dir, ref27):
    pts = empirical_points([(ref27, ref27)])
    assert pts == [(27, None, None)]
    ref = read_matrix(fixtures_dir / "t3_like_reference.csv")
    est = read_matrix(fixtures_dir / "t3_like_estimate.csv")
    [(n, rin, rout)] = empirical_points([(ref, est)])
    # frozen from the first verified run of scripts/make_fixtures.py
    assert n == 27
    assert rin == pytest.approx(7.888897248479198, rel=1e-9)
    assert rout == pytest.approx(11.348507181522548, rel=1e-9)


def test_aggregation_n1_and_full(ref27):
    est, _ = apply(asymmetric_spec(3), ref27)
    s = compare(ref27, est)
    assert aggregate_and_score(ref27, est, 1, "boarding") == pytest.approx(s.err_od, rel=1e-12)
    assert aggregate_and_score(ref27, est, 1, "alighting") == pytest.approx(s.err_od, rel=1e-12)
    assert aggregate_and_score(ref27, est, 27, "boarding") == pytest.approx(s.err_out, rel=1e-12)
    assert aggregate_and_score(ref27, est, 27, "alighting") == pytest.approx(s.err_in, rel=1e-12)


def test_aggregation_blocks():
    d = np.arange(25, dtype=float).reshape(5, 5)
    agg = aggregate_delta(d, 2, "boarding")
    assert agg.shape == (3, 5)
    np.testing.assert_array_equal(agg[0], d[0] + d[1])
    np.testing.assert_array_equal(agg[2], d[4])
    assert aggregate_delta(d, 3, "alighting").shape == (5, 2)
    with pytest.raises(ODNoiseError):
        aggregate_delta(d, 6, "boarding")
    with pytest.raises(ODNoiseError):
        aggregate_delta(d, 0, "boarding")


@pytest.mark.slow
def test_aggregation_prefers_alighting():
    res = aggregation_study(asymmetric_spec(5), 27, [2, 3, 5], replicates=200)
    assert np.all(res.mean("alighting") < res.mean("boarding"))
    assert np.all(res.gap() > 2 * res.gap_sem())


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["short_od", "central_od"])
def test_structured_deviates(kind):
    spec = NoiseSpec((NoiseTerm(kind, 0.1),), clamped=True, seed=8)
    res = run_sweep(SweepConfig(spec, n_values=(20, 30, 50), replicates=200))
    dev = np.abs(res.mean_ratio_in - np.sqrt(res.n_values))
    assert np.all(dev > 3 * res.sem_ratio_in)
