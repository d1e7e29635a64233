"""Core value types: probability vectors, labeled datasets and distances.

A probability vector on the (m-1)-simplex is represented as a read-only
one-dimensional ``numpy`` array.  A dataset stores all predictions as one
``(n, m)`` array so that every estimator can work on whole columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, InvalidSpec, LabelOutOfRange, RejectedVector

DEFAULT_TOLERANCE = 1e-6

# sums this close to 1 are left alone so that validation is idempotent
_SUM_SLACK = 4 * np.finfo(float).eps

SimplexVector = np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate_simplex(raw, tolerance: float = DEFAULT_TOLERANCE) -> SimplexVector:
    """Check that ``raw`` is a probability vector and renormalize it.

    Entries in ``[-tolerance, 0)`` are clamped to zero, then the vector is
    divided by its sum.  Raises :class:`RejectedVector` when an entry is
    below ``-tolerance`` or above ``1 + tolerance``, when the sum is off by
    more than ``tolerance``, or when fewer than two components are given.
    """
    v = np.array(raw, dtype=float).reshape(-1)
    if v.size < 2:
        raise RejectedVector(f"need at least 2 components, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise RejectedVector(f"non-finite component in {v.tolist()}")
    if v.min() < -tolerance:
        raise RejectedVector(f"negative component {v.min()!r} in {v.tolist()}")
    if v.max() > 1.0 + tolerance:
        raise RejectedVector(f"component {v.max()!r} exceeds 1 in {v.tolist()}")
    total = v.sum()
    if abs(total - 1.0) > tolerance:
        raise RejectedVector(f"components sum to {total!r}, not 1")
    v = np.clip(v, 0.0, None)
    total = v.sum()
    if abs(total - 1.0) > _SUM_SLACK * v.size:
        v = v / total
    return _frozen(v)


def validate_simplex_rows(raw, tolerance: float = DEFAULT_TOLERANCE) -> np.ndarray:
    """Row-wise :func:`validate_simplex` for an ``(n, m)`` array.

    The error message of a rejected row carries its 0-based row index.
    """
    a = np.array(raw, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array of predictions, got shape {a.shape}")
    if a.shape[1] < 2:
        raise RejectedVector(f"need at least 2 components, got {a.shape[1]}")
    total = a.sum(axis=1)
    bad = (
        ~np.all(np.isfinite(a), axis=1)
        | (a.min(axis=1) < -tolerance)
        | (a.max(axis=1) > 1.0 + tolerance)
        | (np.abs(total - 1.0) > tolerance)
    )
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        try:
            validate_simplex(a[i], tolerance)
        except RejectedVector as err:
            raise RejectedVector(f"row {i}: {err}") from None
    a = np.clip(a, 0.0, None)
    total = a.sum(axis=1, keepdims=True)
    off = np.abs(total - 1.0) > _SUM_SLACK * a.shape[1]
    a = np.where(off, a / total, a)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Aligned predictions and 0-based class labels.

    ``predictions`` has shape ``(n, m)`` with rows on the simplex and
    ``labels`` has shape ``(n,)``.  Both arrays are made read-only.
    ``class_names`` optionally records the original label names, in index
    order, for datasets read from files with named classes.
    """

    predictions: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        p = np.array(self.predictions, dtype=float)
        y = np.asarray(self.labels)
        if p.ndim != 2:
            raise DimensionMismatch(f"predictions must be 2-d, got shape {p.shape}")
        if y.ndim != 1 or y.shape[0] != p.shape[0]:
            raise DimensionMismatch(
                f"{p.shape[0]} predictions but labels have shape {y.shape}"
            )
        if p.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if y.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise LabelOutOfRange("labels must be integer class indices")
        y = y.astype(np.int64)
        m = p.shape[1]
        if y.min() < 0 or y.max() >= m:
            i = int(np.flatnonzero((y < 0) | (y >= m))[0])
            raise LabelOutOfRange(f"row {i}: label {int(y[i])} outside 0..{m - 1}")
        object.__setattr__(self, "predictions", _frozen(p))
        object.__setattr__(self, "labels", _frozen(y.copy()))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    @classmethod
    def from_rows(cls, predictions, labels, tolerance: float = DEFAULT_TOLERANCE, class_names=None):
        """Validate raw prediction rows and build a dataset."""
        return cls(validate_simplex_rows(predictions, tolerance), np.asarray(labels), class_names)

    @property
    def n(self) -> int:
        return self.predictions.shape[0]

    @property
    def m(self) -> int:
        return self.predictions.shape[1]

    def __len__(self):
        return self.n

    def take(self, rows) -> "LabeledDataset":
        """Subset (or resample) rows by integer index or boolean mask."""
        return LabeledDataset(self.predictions[rows], self.labels[rows], self.class_names)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.predictions.shape == other.predictions.shape
            and np.array_equal(self.predictions, other.predictions)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


class DistanceKind(enum.Enum):
    TOTAL_VARIATION = "tv"
    SQUARED_EUCLIDEAN = "se"

    @classmethod
    def parse(cls, text: str) -> "DistanceKind":
        key = text.strip().lower()
        aliases = {"tv": cls.TOTAL_VARIATION, "total_variation": cls.TOTAL_VARIATION,
                   "se": cls.SQUARED_EUCLIDEAN, "squared_euclidean": cls.SQUARED_EUCLIDEAN}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidSpec(f"unknown distance {text!r}; expected 'tv' or 'se'") from None

    def __call__(self, p, q):
        return distance(self, p, q)


def distance(kind: DistanceKind, p, q):
    """Distance between probability vectors along the last axis.

    Total variation is half the L1 norm of ``p - q``; the squared Euclidean
    distance is the sum of squared differences.  Works on single vectors
    and on stacks of vectors (returns an array in that case).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise DimensionMismatch(f"dimension {p.shape[-1]} vs {q.shape[-1]}")
    diff = p - q
    if kind is DistanceKind.TOTAL_VARIATION:
        out = 0.5 * np.abs(diff).sum(axis=-1)
    elif kind is DistanceKind.SQUARED_EUCLIDEAN:
        out = np.square(diff).sum(axis=-1)
    else:
        raise TypeError(f"not a DistanceKind: {kind!r}")
    return float(out) if np.ndim(out) == 0 else out
