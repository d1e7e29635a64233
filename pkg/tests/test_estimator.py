from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit.binning import EqualWidth1D, SimplexGrid, build_data_dependent_bins
from calibkit.errors import DimensionMismatch, EmptyDataset
from calibkit.estimator import (
    analytic_binned_miscalibration,
    bin_statistics,
    expected_miscalibration,
    restrict_to_bins,
)
from calibkit.lens import Lens, apply_lens
from calibkit.resample import EtaStatistic
from calibkit.binning import parse_bins
from calibkit.types import DistanceKind, LabeledDataset

from strategies import prediction_sets

TV = DistanceKind.TOTAL_VARIATION
SE = DistanceKind.SQUARED_EUCLIDEAN


def brute_eta(P, y, bin_of, kind):
    """Row-by-row reference using dictionaries and plain Python sums."""
    groups = defaultdict(list)
    for i, b in enumerate(bin_of):
        groups[int(b)].append(i)
    n, m = P.shape
    total, worst = 0.0, 0.0
    for rows in groups.values():
        g = [sum(P[i][c] for i in rows) / len(rows) for c in range(m)]
        r = [sum(1 for i in rows if y[i] == c) / len(rows) for c in range(m)]
        if kind is TV:
            d = 0.5 * sum(abs(a - b) for a, b in zip(r, g))
        else:
            d = sum((a - b) ** 2 for a, b in zip(r, g))
        total += len(rows) / n * d
        worst = max(worst, d)
    return total, worst


@given(prediction_sets(min_m=2, max_m=4), st.sampled_from([TV, SE]), st.integers(1, 12))
def test_equal_bins_match_brute_force(ps, kind, n_bins):
    P, y = ps
    d = LabeledDataset(P, y)
    part = EqualWidth1D(n_bins)
    rep = expected_miscalibration(d, part, kind)
    ref, worst = brute_eta(P, y, part.assign(P), kind)
    assert rep.eta_hat == pytest.approx(ref, abs=1e-12)
    assert rep.max_hat == pytest.approx(worst, abs=1e-12)


@given(prediction_sets(m=3, max_n=60), st.sampled_from([TV, SE]), st.integers(1, 8))
def test_grid_and_data_bins_match_brute_force(ps, kind, k):
    P, y = ps
    d = LabeledDataset(P, y)
    for part in (SimplexGrid(k), build_data_dependent_bins(P, threshold=k)):
        ref, _ = brute_eta(P, y, part.assign(P), kind)
        assert expected_miscalibration(d, part, kind).eta_hat == pytest.approx(ref, abs=1e-12)


@given(prediction_sets(min_m=2, max_m=4), st.sampled_from([TV, SE]), st.integers(1, 12))
def test_sum_route_matches_report_route(ps, kind, n_bins):
    # the resampling statistic works from bin sums; the report from bin means
    P, y = ps
    d = LabeledDataset(P, y)
    stat = EtaStatistic(None, parse_bins(f"equal:{n_bins}"), kind)
    rep = expected_miscalibration(d, EqualWidth1D(n_bins), kind)
    assert stat(d) == pytest.approx(rep.eta_hat, abs=1e-12)


@given(prediction_sets(min_m=2, max_m=4), st.integers(1, 10))
def test_bounds(ps, n_bins):
    P, y = ps
    rep = expected_miscalibration(LabeledDataset(P, y), EqualWidth1D(n_bins))
    assert 0.0 <= rep.eta_hat <= rep.max_hat + 1e-12
    assert rep.max_hat <= 1.0 + 1e-12
    assert sum(b.p_hat for b in rep.bins) == pytest.approx(1.0)


def test_single_row_bias_examples():
    one_bin = EqualWidth1D(1)
    sep = LabeledDataset(np.array([[0.0, 1.0]]), np.array([1]))
    assert expected_miscalibration(sep, one_bin).eta_hat == 0.0
    const = LabeledDataset(np.array([[0.5, 0.5]]), np.array([0]))
    assert expected_miscalibration(const, one_bin).eta_hat == 0.5


def test_calibrated_in_every_bin_gives_zero():
    P = np.array([[0.5, 0.5]] * 4 + [[0.25, 0.75]] * 4)
    y = np.array([0, 1, 0, 1, 0, 1, 1, 1])
    rep = expected_miscalibration(LabeledDataset(P, y), EqualWidth1D(10))
    assert rep.eta_hat == 0.0


def test_bin_statistics_fields():
    P = np.array([[0.9, 0.1], [0.7, 0.3], [0.2, 0.8]])
    stats = bin_statistics(LabeledDataset(P, np.array([0, 1, 1])), EqualWidth1D(2))
    assert [b.count for b in stats] == [2, 1]
    np.testing.assert_allclose(stats[0].g_hat, [0.8, 0.2])
    np.testing.assert_allclose(stats[0].r_hat, [0.5, 0.5])
    assert stats[1].p_hat == pytest.approx(1 / 3)


def test_empty_bins_reported_as_empty():
    d = LabeledDataset(np.array([[0.9, 0.1]]), np.array([0]))
    stats = bin_statistics(d, EqualWidth1D(4))
    assert [b.empty for b in stats] == [False, True, True, True]
    assert stats[1].g_hat is None


def test_dimension_mismatch():
    d = LabeledDataset(np.array([[0.5, 0.5]]), np.array([0]))
    with pytest.raises(DimensionMismatch):
        expected_miscalibration(d, SimplexGrid(2))


def test_restrict_to_bins():
    P = np.array([[0.9, 0.1], [0.6, 0.4], [0.1, 0.9]])
    d = LabeledDataset(P, np.array([0, 0, 1]))
    part = EqualWidth1D(2)
    sub = restrict_to_bins(d, part, [1])
    assert sub.n == 1
    with pytest.raises(EmptyDataset):
        restrict_to_bins(LabeledDataset(P[:1], np.array([0])), part, [1])


def test_toy_lenses_by_hand(toy):
    canon = apply_lens(Lens.canonical(3), toy)
    part = build_data_dependent_bins(canon.predictions, threshold=10)
    assert part.n_bins == 6
    rep = expected_miscalibration(canon, part)
    # each of the six rows: TV between row and its conditional
    by_hand = np.mean([0.1, 0.1, 0.1, 0.1, 0.1, 0.1])
    assert rep.eta_hat == pytest.approx(by_hand, abs=1e-12)


# closed-form oracles for the quadrature route: uniform weight on [0, 1],
# calibration curve s^2.  On [a, b]: integral of (s^2 - s) = (b^3-a^3)/3 - (b^2-a^2)/2
def _dev(a, b):
    return (b ** 3 - a ** 3) / 3 - (b ** 2 - a ** 2) / 2


@pytest.mark.parametrize("n_bins", [1, 2, 5, 10])
def test_analytic_binned_tv_closed_form(n_bins):
    edges = np.linspace(0, 1, n_bins + 1)
    ref = sum(abs(_dev(a, b)) for a, b in zip(edges[:-1], edges[1:]))
    got = analytic_binned_miscalibration(lambda s: s * s, lambda s: 1.0, EqualWidth1D(n_bins))
    assert got == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("n_bins", [1, 4])
def test_analytic_binned_se_closed_form(n_bins):
    edges = np.linspace(0, 1, n_bins + 1)
    # binary SE of (r, g) vectors is 2 (r - g)^2; bin mass (b - a)
    ref = sum(2 * _dev(a, b) ** 2 / (b - a) for a, b in zip(edges[:-1], edges[1:]))
    got = analytic_binned_miscalibration(lambda s: s * s, lambda s: 1.0, EqualWidth1D(n_bins),
                                         SE)
    assert got == pytest.approx(ref, abs=1e-10)


def test_analytic_binned_calibrated_is_zero():
    got = analytic_binned_miscalibration(lambda s: s, lambda s: 6 * s * (1 - s), EqualWidth1D(7))
    assert abs(got) < 1e-12


def test_analytic_binned_with_decreasing_predict():
    # predict(s) = 1 - s traverses the same bins backwards; curve given in s
    got = analytic_binned_miscalibration(lambda s: (1 - s) ** 2, lambda s: 1.0, EqualWidth1D(2),
                                         predict=lambda s: 1 - s)
    assert got == pytest.approx(1 / 6, abs=1e-10)
