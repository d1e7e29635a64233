"""Consistency resampling, bootstrap, per-bin consistency bands and the
resampling test of perfect calibration.

Consistency resampling draws predictions with replacement and then a label
from each drawn prediction itself, which simulates a perfectly calibrated
model with the same prediction distribution.  Replicate ``j`` always uses
the random stream keyed by ``(seed, j)``, so results do not depend on how
replicates are spread over workers.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .binning import BinningSpec, Partition, parse_bins
from .errors import EmptyInput, InvalidSpec
from .estimator import bin_sums, eta_from_sums
from .lens import Lens, apply_lens
from .rng import DEFAULT_SEED, stream
from .types import DistanceKind, LabeledDataset

CONSISTENCY = "consistency"
BOOTSTRAP = "bootstrap"

# replicates handled per work item; bounds memory of batched bincounts
_CHUNK = 64


def sample_labels(predictions: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of one label per row given uniforms ``u`` in [0, 1)."""
    cdf = np.cumsum(predictions[:, :-1], axis=1)
    return (u[:, None] >= cdf).sum(axis=1)


def _consistency_draw(predictions: np.ndarray, rng: np.random.Generator):
    n = predictions.shape[0]
    rows = rng.integers(0, n, size=n)
    u = rng.random(n)
    return rows, sample_labels(predictions[rows], u)


def consistency_resample(predictions, rng: np.random.Generator) -> LabeledDataset:
    """Bootstrap the predictions, then draw each label from its prediction."""
    p = np.asarray(predictions, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise EmptyInput("consistency resampling needs at least one prediction")
    rows, labels = _consistency_draw(p, rng)
    return LabeledDataset(p[rows], labels)


def bootstrap_resample(data: LabeledDataset, rng: np.random.Generator) -> LabeledDataset:
    """Draw ``n`` (prediction, label) pairs with replacement."""
    if data.n == 0:
        raise EmptyInput("bootstrap needs at least one row")
    return data.take(rng.integers(0, data.n, size=data.n))


@dataclass(frozen=True)
class EtaStatistic:
    """Binned expected miscalibration of the lens-induced data.

    ``frozen_partition`` keeps a data-dependent partition fixed at the one
    built from the observed data instead of rebuilding it per replicate.
    """

    lens: Lens | None = None
    bins: BinningSpec = field(default_factory=lambda: parse_bins("equal:10"))
    distance: DistanceKind = DistanceKind.TOTAL_VARIATION
    frozen_partition: bool = False

    def induce(self, data: LabeledDataset) -> LabeledDataset:
        return data if self.lens is None else apply_lens(self.lens, data)

    def partition_for(self, induced: LabeledDataset) -> Partition:
        return self.bins.build(induced.predictions)

    def on_induced(self, induced: LabeledDataset, partition: Partition | None = None) -> float:
        if partition is None:
            partition = self.partition_for(induced)
        idx = partition.assign(induced.predictions)
        count, K, S = bin_sums(idx, induced.predictions, induced.labels, partition.n_bins)
        return eta_from_sums(count, K, S, induced.n, self.distance)

    def __call__(self, data: LabeledDataset) -> float:
        return self.on_induced(self.induce(data))

    def describe(self) -> str:
        lens = "canonical" if self.lens is None else self.lens.spec()
        return f"eta_hat[{self.distance.value}; lens={lens}; bins={self.bins.spec()}]"

    @property
    def fixed_bins(self) -> bool:
        return self.frozen_partition or not self.bins.data_dependent


@dataclass(frozen=True)
class ResamplePlan:
    replicates: int = 1000
    seed: int = DEFAULT_SEED
    mode: str = CONSISTENCY
    statistic: Callable[[LabeledDataset], float] = field(default_factory=EtaStatistic)
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidSpec(f"replicates must be >= 1, got {self.replicates}")
        if self.mode not in (CONSISTENCY, BOOTSTRAP):
            raise InvalidSpec(f"unknown resampling mode {self.mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class TestResult:
    observed: float
    null_samples: np.ndarray
    p_value: float
    statistic: str = ""
    seed: int = DEFAULT_SEED

    __test__ = False  # not a pytest class

    @property
    def replicates(self) -> int:
        return int(self.null_samples.size)

    def null_quantiles(self) -> dict:
        qs = (0.01, 0.05, 0.5, 0.95, 0.99)
        vals = np.quantile(self.null_samples, qs)
        return {f"q{round(q * 100):02d}": float(v) for q, v in zip(qs, vals)}

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "B": self.replicates,
            "seed": self.seed,
            "p_value": self.p_value,
            "null_quantiles": self.null_quantiles(),
        }


def p_value(observed: float, null_samples) -> float:
    """Add-one estimate of ``P[null >= observed]``."""
    null = np.asarray(null_samples, dtype=float)
    return float((1 + np.count_nonzero(null >= observed)) / (null.size + 1))


def _resolve_workers(workers: int) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return int(workers)


def _run_chunks(fn, replicates: int, workers: int):
    """Evaluate ``fn(start, stop)`` over replicate chunks; results in order."""
    starts = list(range(0, replicates, _CHUNK))
    spans = [(s, min(s + _CHUNK, replicates)) for s in starts]
    workers = _resolve_workers(workers)
    if workers == 1 or len(spans) == 1:
        parts = [fn(a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), spans))
    return np.concatenate(parts)


def _fast_consistency(induced: LabeledDataset, stat: EtaStatistic, partition: Partition,
                      plan: ResamplePlan) -> np.ndarray:
    """Null samples for a fixed partition, batched over replicates."""
    preds = induced.predictions
    n, m = preds.shape
    L = partition.n_bins
    bin_of_row = partition.assign(preds)

    def chunk(a, b):
        width = b - a
        flat_bins = np.empty(width * n, dtype=np.int64)
        flat_labels = np.empty(width * n, dtype=np.int64)
        flat_rows = np.empty(width * n, dtype=np.int64)
        for t, j in enumerate(range(a, b)):
            rows, labels = _consistency_draw(preds, stream(plan.seed, j))
            sl = slice(t * n, (t + 1) * n)
            flat_bins[sl] = bin_of_row[rows] + t * L
            flat_labels[sl] = labels
            flat_rows[sl] = rows
        count, K, S = bin_sums(flat_bins, preds[flat_rows], flat_labels, width * L)
        count = count.reshape(width, L)
        K = K.reshape(width, L, m)
        S = S.reshape(width, L, m)
        return np.array([eta_from_sums(count[t], K[t], S[t], n, stat.distance)
                         for t in range(width)])

    return _run_chunks(chunk, plan.replicates, plan.workers)


def null_distribution(data: LabeledDataset, plan: ResamplePlan) -> np.ndarray:
    """Statistic values over ``plan.replicates`` resamples, in replicate order."""
    stat = plan.statistic
    if isinstance(stat, EtaStatistic):
        induced = stat.induce(data)
        if plan.mode == CONSISTENCY and stat.fixed_bins:
            return _fast_consistency(induced, stat, stat.partition_for(induced), plan)
        frozen = stat.partition_for(induced) if stat.fixed_bins else None

        def one(j):
            rng = stream(plan.seed, j)
            if plan.mode == CONSISTENCY:
                sample = consistency_resample(induced.predictions, rng)
            else:
                sample = bootstrap_resample(induced, rng)
            return stat.on_induced(sample, frozen)
    else:
        def one(j):
            rng = stream(plan.seed, j)
            if plan.mode == CONSISTENCY:
                sample = consistency_resample(data.predictions, rng)
            else:
                sample = bootstrap_resample(data, rng)
            return float(stat(sample))

    return _run_chunks(lambda a, b: np.array([one(j) for j in range(a, b)]),
                       plan.replicates, plan.workers)


def observed_statistic(data: LabeledDataset, plan: ResamplePlan) -> float:
    return float(plan.statistic(data))


def pvalue_test(data: LabeledDataset, plan: ResamplePlan) -> TestResult:
    """Resampling test of perfect calibration.

    The null distribution of the statistic comes from consistency
    resamples of ``data``; the p-value is the add-one fraction of null
    values at least as large as the observed one.
    """
    if plan.mode != CONSISTENCY:
        raise InvalidSpec("the calibration test needs consistency resampling")
    observed = observed_statistic(data, plan)
    null = np.sort(null_distribution(data, plan))
    null.setflags(write=False)
    desc = plan.statistic.describe() if hasattr(plan.statistic, "describe") else repr(plan.statistic)
    return TestResult(observed, null, p_value(observed, null), desc, int(plan.seed))


def _deviation_samples(data: LabeledDataset, partition: Partition, replicates: int,
                       seed: int, workers: int, tracked_only: bool):
    """Per replicate and bin, ``r_hat - g_hat`` (NaN for empty bins)."""
    preds = data.predictions
    n, m = preds.shape
    L = partition.n_bins
    bin_of_row = partition.assign(preds)

    def chunk(a, b):
        out = []
        for j in range(a, b):
            rows, labels = _consistency_draw(preds, stream(seed, j))
            count, K, S = bin_sums(bin_of_row[rows], preds[rows], labels, L)
            with np.errstate(invalid="ignore", divide="ignore"):
                dev = (K - S) / count[:, None]
            dev[count == 0] = np.nan
            out.append(dev[:, -1] if tracked_only else dev)
        return np.stack(out)

    return _run_chunks(chunk, replicates, workers)


def consistency_bands(data: LabeledDataset, partition: Partition,
                      quantiles=(0.05, 0.95), replicates: int = 1000,
                      seed: int = DEFAULT_SEED, workers: int = 1,
                      tracked_only: bool | None = None):
    """Per-bin quantiles of the deviation under consistency resampling.

    Returns ``(lo, hi)`` arrays of shape ``(L,)`` for one-dimensional
    partitions (tracked last component) or ``(L, m)`` otherwise.  Bins that
    are empty in a replicate contribute no sample from it; bins never
    populated get NaN.
    """
    lo_q, hi_q = map(float, quantiles)
    if not 0.0 <= lo_q < hi_q <= 1.0:
        raise InvalidSpec(f"need 0 <= lo < hi <= 1, got {quantiles}")
    if tracked_only is None:
        tracked_only = partition.is_1d
    dev = _deviation_samples(data, partition, replicates, seed, workers, tracked_only)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lo = np.nanquantile(dev, lo_q, axis=0)
        hi = np.nanquantile(dev, hi_q, axis=0)
    return lo, hi


def bootstrap_std(data: LabeledDataset, statistic: Callable[[LabeledDataset], float],
                  replicates: int = 200, seed: int = DEFAULT_SEED, workers: int = 1) -> float:
    """Standard deviation of a statistic over full bootstrap resamples."""
    plan = ResamplePlan(replicates, seed, BOOTSTRAP, statistic, workers)
    return float(np.std(null_distribution(data, plan), ddof=1)) if replicates > 1 else 0.0


@dataclass(frozen=True)
class Comparison:
    """Two models evaluated by the same statistic, never ranked by the raw
    estimate alone."""

    first: TestResult
    second: TestResult
    # P[null of first >= observed of second] and the reverse
    first_null_vs_second: float
    second_null_vs_first: float

    NOTE = ("Raw estimates are biased by different, unknown amounts; ordering "
            "models by them alone is not a valid comparison. Compare p-values.")

    def to_dict(self, inputs=None) -> dict:
        out = {
            "A": self.first.to_dict(),
            "B": self.second.to_dict(),
            "p_values": {"A": self.first.p_value, "B": self.second.p_value},
            "observed": {"A": self.first.observed, "B": self.second.observed},
            "cross": {
                "P[null_A >= observed_B]": self.first_null_vs_second,
                "P[null_B >= observed_A]": self.second_null_vs_first,
            },
            "note": self.NOTE,
        }
        if inputs is not None:
            out["inputs"] = {"A": str(inputs[0]), "B": str(inputs[1])}
        return out


def compare(first: LabeledDataset, second: LabeledDataset, plan: ResamplePlan) -> Comparison:
    """Test both models and compute the cross-model exceedance probabilities."""
    ra = pvalue_test(first, plan)
    rb = pvalue_test(second, plan)
    return Comparison(ra, rb, float(np.mean(ra.null_samples >= rb.observed)),
                      float(np.mean(rb.null_samples >= ra.observed)))


def variant_matrix(data: LabeledDataset, lenses, distances, binnings,
                   replicates: int = 200, seed: int = DEFAULT_SEED, workers: int = 1):
    """Estimates for every lens x distance x binning combination.

    Each row reports ``eta_hat`` with its bootstrap standard deviation and
    the mean and standard deviation of the statistic under consistency
    resampling, i.e. the value a perfectly calibrated model with the same
    predictions would typically show.
    """
    rows = []
    for lens in lenses:
        for kind in distances:
            for bins in binnings:
                stat = EtaStatistic(lens, bins, kind)
                null = null_distribution(data, ResamplePlan(replicates, seed, CONSISTENCY,
                                                            stat, workers))
                rows.append({
                    "lens": lens.spec(),
                    "distance": kind.value,
                    "bins": bins.spec(),
                    "eta_hat": float(stat(data)),
                    # offset seed: bootstrap and consistency draws must not share rows
                    "eta_hat_std": bootstrap_std(data, stat, replicates, (seed + 1) % 2**64,
                                                 workers),
                    "eta_id": float(np.mean(null)),
                    "eta_id_std": float(np.std(null, ddof=1)) if replicates > 1 else 0.0,
                })
    return rows
