import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit.binning import EqualWidth1D, parse_bins
from calibkit.errors import InvalidSpec
from calibkit.gmm import PERFECT, UNCALIBRATED, simulate
from calibkit.lens import Lens
from calibkit.resample import (
    BOOTSTRAP,
    EtaStatistic,
    ResamplePlan,
    bootstrap_resample,
    bootstrap_std,
    compare,
    consistency_bands,
    consistency_resample,
    null_distribution,
    p_value,
    pvalue_test,
    sample_labels,
    variant_matrix,
)
from calibkit.rng import stream
from calibkit.types import DistanceKind, LabeledDataset

from strategies import simplex_vectors


def test_p_value_add_one():
    assert p_value(1.0, [0.1, 0.2, 0.3]) == 0.25
    assert p_value(0.0, [0.1, 0.2, 0.3]) == 1.0
    assert p_value(0.2, [0.1, 0.2, 0.3]) == 0.75


@given(st.floats(0, 1), st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_p_value_range(obs, null):
    p = p_value(obs, null)
    assert 1 / (len(null) + 1) <= p <= 1.0


def test_sample_labels_inverse_cdf():
    P = np.array([[0.2, 0.3, 0.5]] * 6)
    u = np.array([0.0, 0.19, 0.2, 0.49, 0.5, 0.999])
    np.testing.assert_array_equal(sample_labels(P, u), [0, 0, 1, 1, 2, 2])


@given(simplex_vectors(min_m=2, max_m=5))
def test_zero_probability_class_never_drawn(mu):
    mu = mu.copy()
    mu[0] = 0.0
    if mu.sum() == 0:
        mu[-1] = 1.0
    mu /= mu.sum()
    labels = sample_labels(np.tile(mu, (200, 1)), stream(3).random(200))
    assert not np.any(labels == 0)


def test_consistency_labels_follow_predictions():
    # chi-square oracle on 20000 draws from one prediction
    mu = np.array([0.1, 0.6, 0.3])
    d = consistency_resample(np.tile(mu, (20000, 1)), stream(1))
    freq = np.bincount(d.labels, minlength=3)
    chi2 = ((freq - 20000 * mu) ** 2 / (20000 * mu)).sum()
    assert chi2 < 13.8  # 0.999 quantile of chi-square with 2 dof


def test_bootstrap_resample_rows_come_from_data():
    d = LabeledDataset(np.array([[0.9, 0.1], [0.2, 0.8]]), np.array([0, 1]))
    b = bootstrap_resample(d, stream(0))
    for p, y in zip(b.predictions, b.labels):
        assert (p[1] == 0.1 and y == 0) or (p[1] == 0.8 and y == 1)


def test_null_distribution_independent_of_workers():
    data = simulate(UNCALIBRATED, 500, stream(2))
    base = ResamplePlan(replicates=150, seed=9)
    ref = null_distribution(data, base)
    for workers in (2, 4, 0):
        plan = ResamplePlan(replicates=150, seed=9, workers=workers)
        np.testing.assert_array_equal(null_distribution(data, plan), ref)


def test_fast_path_matches_generic_path():
    data = simulate(UNCALIBRATED, 300, stream(4))
    for kind in DistanceKind:
        stat = EtaStatistic(None, parse_bins("equal:7"), kind)
        fast = null_distribution(data, ResamplePlan(100, 5, statistic=stat))
        slow = null_distribution(data, ResamplePlan(100, 5, statistic=lambda d: stat(d)))
        np.testing.assert_allclose(fast, slow, atol=1e-12, rtol=0)


def test_frozen_partition_option():
    data = simulate(UNCALIBRATED, 400, stream(8))
    rebuilt = EtaStatistic(None, parse_bins("data:50"))
    frozen = EtaStatistic(None, parse_bins("data:50"), frozen_partition=True)
    a = null_distribution(data, ResamplePlan(40, 1, statistic=rebuilt))
    b = null_distribution(data, ResamplePlan(40, 1, statistic=frozen))
    assert a.shape == b.shape == (40,)
    assert not np.array_equal(a, b)


def test_pvalue_rejects_gross_miscalibration():
    data = simulate(UNCALIBRATED, 2000, stream(3))
    res = pvalue_test(data, ResamplePlan(200, 1, statistic=EtaStatistic(Lens.max(2))))
    assert res.p_value == 1 / 201
    out = res.to_dict()
    assert out["B"] == 200 and set(out["null_quantiles"]) == {"q01", "q05", "q50", "q95", "q99"}


def test_pvalue_calibrated_not_extreme():
    data = simulate(PERFECT, 2000, stream(3))
    res = pvalue_test(data, ResamplePlan(200, 1))
    assert res.p_value > 0.01


def test_pvalue_needs_consistency_mode():
    data = simulate(PERFECT, 50, stream(3))
    with pytest.raises(InvalidSpec):
        pvalue_test(data, ResamplePlan(10, 1, mode=BOOTSTRAP))


def test_plan_validation():
    with pytest.raises(InvalidSpec):
        ResamplePlan(replicates=0)
    with pytest.raises(InvalidSpec):
        ResamplePlan(mode="jackknife")
    with pytest.raises(InvalidSpec):
        ResamplePlan(seed=-1)


def test_bands_match_binomial_normal_approximation():
    # constant (1/2, 1/2) predictor, one bin: deviation is (k/n - 1/2);
    # Monte Carlo band vs exact binomial quantiles
    from scipy.stats import binom

    n = 400
    data = LabeledDataset(np.tile([0.5, 0.5], (n, 1)), np.zeros(n, dtype=int))
    lo, hi = consistency_bands(data, EqualWidth1D(1), replicates=2000, seed=3)
    assert lo.shape == hi.shape == (1,)
    ref_lo = binom.ppf(0.05, n, 0.5) / n - 0.5
    ref_hi = binom.ppf(0.95, n, 0.5) / n - 0.5
    assert lo[0] == pytest.approx(ref_lo, abs=0.01)
    assert hi[0] == pytest.approx(ref_hi, abs=0.01)


def test_bands_nan_for_never_populated_bins():
    data = LabeledDataset(np.tile([0.9, 0.1], (30, 1)), np.zeros(30, dtype=int))
    lo, hi = consistency_bands(data, EqualWidth1D(4), replicates=50, seed=1)
    assert np.isfinite(lo[0]) and np.isnan(lo[1:]).all()


def test_bootstrap_std_positive_and_seeded():
    data = simulate(UNCALIBRATED, 300, stream(0))
    stat = EtaStatistic()
    s1 = bootstrap_std(data, stat, replicates=50, seed=2)
    assert s1 > 0
    assert bootstrap_std(data, stat, replicates=50, seed=2) == s1


def test_compare_reports_both_pvalues_and_note():
    a = simulate(UNCALIBRATED, 1000, stream(1))
    b = simulate(PERFECT, 1000, stream(2))
    cmp_ = compare(a, b, ResamplePlan(100, 7))
    out = cmp_.to_dict(inputs=("a.csv", "b.csv"))
    assert set(out["p_values"]) == {"A", "B"}
    assert out["p_values"]["A"] < out["p_values"]["B"]
    assert "not a valid comparison" in out["note"]
    assert 0.0 <= out["cross"]["P[null_A >= observed_B]"] <= 1.0


def test_variant_matrix_rows():
    data = simulate(UNCALIBRATED, 400, stream(1))
    rows = variant_matrix(data, [Lens.canonical(2)], list(DistanceKind),
                          [parse_bins("equal:5")], replicates=20, seed=1)
    assert [(r["distance"], r["bins"]) for r in rows] == [("tv", "equal:5"), ("se", "equal:5")]
    for r in rows:
        assert r["eta_hat"] > r["eta_id"] >= 0.0
        assert r["eta_hat_std"] > 0.0
