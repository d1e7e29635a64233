"""Histogram regression of the calibration function and binned
miscalibration estimates.

For a partition into bins, each nonempty bin ``i`` gets

* ``p_hat``: fraction of all predictions falling in the bin,
* ``g_hat``: average prediction in the bin,
* ``r_hat``: empirical label distribution in the bin,

and the expected miscalibration estimate is ``sum_i p_hat_i d(r_hat_i, g_hat_i)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .binning import Partition
from .errors import DimensionMismatch, EmptyDataset, QuadratureFailure
from .lens import Lens
from .types import DistanceKind, LabeledDataset, distance

QUAD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class BinSummary:
    bin_index: int
    count: int
    p_hat: float
    g_hat: np.ndarray | None
    r_hat: np.ndarray | None

    @property
    def empty(self) -> bool:
        return self.count == 0

    def to_dict(self) -> dict:
        return {
            "index": self.bin_index,
            "count": self.count,
            "p_hat": self.p_hat,
            "g_hat": None if self.g_hat is None else self.g_hat.tolist(),
            "r_hat": None if self.r_hat is None else self.r_hat.tolist(),
        }


@dataclass(frozen=True)
class MiscalibrationReport:
    eta_hat: float
    max_hat: float
    distance: DistanceKind
    partition: Partition
    bins: list[BinSummary]
    lens: Lens | None = None
    n: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "eta_hat": self.eta_hat,
            "max_hat": self.max_hat,
            "distance": self.distance.value,
            "lens": None if self.lens is None else self.lens.spec(),
            "scheme": self.partition.to_dict(),
            "n": self.n,
            "bins": [b.to_dict() for b in self.bins],
        }
        out.update(self.extra)
        return out


def bin_sums(bin_idx, predictions, labels, n_bins: int):
    """Per-bin counts, label counts and prediction sums.

    Returns ``(count, K, S)`` with ``K[i, y]`` the number of rows in bin
    ``i`` with label ``y`` and ``S[i]`` the sum of their predictions.
    """
    m = predictions.shape[1]
    count = np.bincount(bin_idx, minlength=n_bins)
    K = np.bincount(bin_idx * m + labels, minlength=n_bins * m).reshape(n_bins, m)
    S = np.empty((n_bins, m))
    for c in range(m):
        S[:, c] = np.bincount(bin_idx, weights=predictions[:, c], minlength=n_bins)
    return count, K.astype(float), S


def eta_from_sums(count, K, S, n: int, kind: DistanceKind) -> float:
    """Binned estimate from per-bin sums; empty bins contribute nothing.

    Uses ``p_hat * d(r_hat, g_hat)`` with ``r_hat = K / count`` and
    ``g_hat = S / count``, so for total variation the count cancels.
    """
    if kind is DistanceKind.TOTAL_VARIATION:
        return float(0.5 * np.abs(K - S).sum() / n)
    nz = count > 0
    diff = K[nz] - S[nz]
    return float((np.square(diff).sum(axis=1) / count[nz]).sum() / n)


def _check_dim(data: LabeledDataset, partition: Partition):
    if partition.m is not None and partition.m != data.m:
        raise DimensionMismatch(f"partition built for m={partition.m}, data has m={data.m}")


def bin_statistics(data: LabeledDataset, partition: Partition) -> list[BinSummary]:
    _check_dim(data, partition)
    idx = partition.assign(data.predictions)
    count, K, S = bin_sums(idx, data.predictions, data.labels, partition.n_bins)
    out = []
    for i in range(partition.n_bins):
        c = int(count[i])
        if c == 0:
            out.append(BinSummary(i, 0, 0.0, None, None))
            continue
        out.append(BinSummary(i, c, c / data.n, _ro(S[i] / c), _ro(K[i] / c)))
    return out


def _ro(a):
    a.setflags(write=False)
    return a


def expected_miscalibration(
    data: LabeledDataset,
    partition: Partition,
    kind: DistanceKind = DistanceKind.TOTAL_VARIATION,
    lens: Lens | None = None,
) -> MiscalibrationReport:
    """Binned estimate of expected miscalibration plus the worst bin.

    ``data`` must already be in the induced space of ``lens``; the lens is
    only recorded in the report.  ``max_hat`` is the largest per-bin
    distance over nonempty bins.
    """
    if data is None or data.n == 0:
        raise EmptyDataset("no rows to evaluate")
    bins = bin_statistics(data, partition)
    nonempty = [b for b in bins if b.count]
    per_bin = [distance(kind, b.r_hat, b.g_hat) for b in nonempty]
    eta = float(sum(b.p_hat * d for b, d in zip(nonempty, per_bin)))
    return MiscalibrationReport(
        eta_hat=eta,
        max_hat=float(max(per_bin)),
        distance=kind,
        partition=partition,
        bins=bins,
        lens=lens,
        n=data.n,
    )


def restrict_to_bins(data: LabeledDataset, partition: Partition, bins) -> LabeledDataset:
    """Rows whose prediction falls in one of ``bins``: conditioning on a
    region of the simplex before estimation."""
    _check_dim(data, partition)
    keep = np.isin(partition.assign(data.predictions), np.asarray(list(bins), dtype=np.int64))
    if not keep.any():
        raise EmptyDataset(f"no predictions fall in bins {sorted(bins)}")
    return data.take(keep)


def _quad(f, a, b, tol):
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=500,
                                        full_output=1)[:3]
    if not np.isfinite(val) or err > tol:
        raise QuadratureFailure(f"quadrature on [{a}, {b}] reached error {err:g} > {tol:g}")
    return val


def analytic_binned_miscalibration(
    curve: Callable[[float], float],
    weight: Callable[[float], float],
    partition: Partition,
    kind: DistanceKind = DistanceKind.TOTAL_VARIATION,
    *,
    predict: Callable[[float], float] | None = None,
    domain: tuple[float, float] = (0.0, 1.0),
    tol: float = QUAD_TOLERANCE,
) -> float:
    """Population value of the binned estimator for a binary problem.

    The integration variable ``s`` runs over ``domain`` with density
    ``weight(s)``.  ``predict(s)`` is the tracked (positive-class)
    prediction and ``curve(s)`` the true positive-class probability given
    that prediction; by default ``predict`` is the identity on ``[0, 1]``.
    ``predict`` must be monotone (or constant) on the domain.

    Each bin gets its mass, mean prediction and mean calibration value by
    adaptive quadrature and the result is ``sum mass * d(mean r, mean g)``:
    the almost sure large-sample limit of the estimator for this fixed
    partition.
    """
    if not partition.is_1d:
        raise DimensionMismatch("analytic binned miscalibration needs a 1-d partition")
    if predict is None:
        predict = lambda s: s  # noqa: E731
    a, b = map(float, domain)
    pa, pb = predict(a), predict(b)

    cuts = {a, b}
    for e in partition.edges_1d():
        if min(pa, pb) < e < max(pa, pb):
            cuts.add(optimize.brentq(lambda s: predict(s) - e, a, b, xtol=1e-14, rtol=1e-15))
    cuts = sorted(cuts)

    n_bins = partition.n_bins
    mass = np.zeros(n_bins)
    dev = np.zeros(n_bins)
    first = np.zeros(n_bins)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        t_mid = predict(0.5 * (lo + hi))
        i = partition.assign_bin([1.0 - t_mid, t_mid])
        mass[i] += _quad(weight, lo, hi, tol)
        dev[i] += _quad(lambda s: (curve(s) - predict(s)) * weight(s), lo, hi, tol)
        first[i] += _quad(lambda s: predict(s) * weight(s), lo, hi, tol)

    total = 0.0
    for i in range(n_bins):
        if mass[i] <= 0.0:
            continue
        g = first[i] / mass[i]
        r = g + dev[i] / mass[i]
        if kind is DistanceKind.TOTAL_VARIATION:
            # mass * |r - g| without dividing by a possibly tiny mass
            total += abs(dev[i])
        else:
            total += mass[i] * distance(kind, [1.0 - r, r], [1.0 - g, g])
    return float(total)
