"""Calibration lenses.

A lens maps an (outcome, prediction) pair of an m-class problem to the
outcome of a smaller induced problem, and pushes each prediction forward to
a prediction on the induced outcome space.  Three families are supported:

* ``canonical``: the identity, the full calibration function.
* ``groups``: a fixed partition of the classes into groups.
* ``topk``: outcome ``i`` (1..k) when the label is the class with the i-th
  largest predicted probability, outcome 0 otherwise.  ``topk:1`` (alias
  ``max``) is the usual confidence calibration of the predicted class.

Ordering ties in ``topk`` are broken by the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, LabelOutOfRange
from .types import LabeledDataset

CANONICAL = "canonical"
PARTITION = "groups"
TOPK = "topk"


@dataclass(frozen=True)
class Lens:
    kind: str
    source_classes: int
    groups: tuple[tuple[int, ...], ...] = ()
    k: int = 0

    def __post_init__(self):
        m = self.source_classes
        if m < 1:
            raise InvalidSpec(f"source_classes must be positive, got {m}")
        if self.kind == PARTITION:
            groups = tuple(tuple(int(c) for c in g) for g in self.groups)
            flat = [c for g in groups for c in g]
            if any(len(g) == 0 for g in groups):
                raise InvalidSpec("lens groups must be nonempty")
            if sorted(flat) != list(range(m)):
                raise InvalidSpec(
                    f"lens groups {groups} must be disjoint and cover classes 0..{m - 1}"
                )
            object.__setattr__(self, "groups", groups)
        elif self.kind == TOPK:
            if not 1 <= self.k < m:
                raise InvalidSpec(f"topk needs 1 <= k < {m}, got k={self.k}")
        elif self.kind != CANONICAL:
            raise InvalidSpec(f"unknown lens kind {self.kind!r}")

    @classmethod
    def canonical(cls, m: int) -> "Lens":
        return cls(CANONICAL, m)

    @classmethod
    def partition(cls, groups, m: int | None = None) -> "Lens":
        groups = tuple(tuple(g) for g in groups)
        if m is None:
            m = sum(len(g) for g in groups)
        return cls(PARTITION, m, groups=groups)

    @classmethod
    def topk(cls, k: int, m: int) -> "Lens":
        return cls(TOPK, m, k=int(k))

    @classmethod
    def max(cls, m: int) -> "Lens":
        return cls.topk(1, m)

    @property
    def induced_classes(self) -> int:
        if self.kind == PARTITION:
            return len(self.groups)
        if self.kind == TOPK:
            return self.k + 1
        return self.source_classes

    def spec(self) -> str:
        """Inverse of :func:`parse_lens`."""
        if self.kind == PARTITION:
            return "groups:" + "|".join(",".join(map(str, g)) for g in self.groups)
        if self.kind == TOPK:
            return f"topk:{self.k}"
        return CANONICAL

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "spec": self.spec(), "source_classes": self.source_classes}
        if self.kind == PARTITION:
            out["groups"] = [list(g) for g in self.groups]
        if self.kind == TOPK:
            out["k"] = self.k
        return out


def parse_lens(text: str, m: int) -> Lens:
    """Parse ``canonical``, ``max``, ``topk:K`` or ``groups:0,1|2``."""
    t = text.strip().lower()
    if t == CANONICAL:
        return Lens.canonical(m)
    if t == "max":
        return Lens.max(m)
    head, sep, rest = t.partition(":")
    try:
        if head == TOPK and sep:
            return Lens.topk(int(rest), m)
        if head == PARTITION and sep:
            groups = [[int(c) for c in g.split(",")] for g in rest.split("|")]
            return Lens.partition(groups, m)
    except ValueError as err:
        if isinstance(err, InvalidSpec):
            raise
        raise InvalidSpec(f"malformed lens spec {text!r}: {err}") from None
    raise InvalidSpec(
        f"unknown lens spec {text!r}; expected canonical, max, topk:K or groups:0,1|2"
    )


def _ranking(predictions: np.ndarray, k: int) -> np.ndarray:
    """Class indices of the k largest predictions per row, ties to lowest index."""
    # stable sort on negated values keeps lower class indices first among ties
    return np.argsort(-predictions, axis=1, kind="stable")[:, :k]


def _check_dim(lens: Lens, m: int):
    if m != lens.source_classes:
        raise DimensionMismatch(
            f"lens expects {lens.source_classes} classes, prediction has {m}"
        )


def induced_predictions(lens: Lens, predictions: np.ndarray) -> np.ndarray:
    """Push an ``(n, m)`` array of predictions through the lens."""
    p = np.asarray(predictions, dtype=float)
    _check_dim(lens, p.shape[1])
    if lens.kind == CANONICAL:
        return p.copy()
    if lens.kind == PARTITION:
        return np.stack([p[:, list(g)].sum(axis=1) for g in lens.groups], axis=1)
    order = _ranking(p, lens.k)
    top = np.take_along_axis(p, order, axis=1)
    rest = 1.0 - top.sum(axis=1)
    out = np.empty((p.shape[0], lens.k + 1))
    out[:, 0] = np.clip(rest, 0.0, None)
    out[:, 1:] = top
    return out


def induced_labels(lens: Lens, labels: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    _check_dim(lens, p.shape[1])
    if y.size and (y.min() < 0 or y.max() >= lens.source_classes):
        i = int(np.flatnonzero((y < 0) | (y >= lens.source_classes))[0])
        raise LabelOutOfRange(f"row {i}: label {int(y[i])} outside 0..{lens.source_classes - 1}")
    if lens.kind == CANONICAL:
        return y.copy()
    if lens.kind == PARTITION:
        lookup = np.empty(lens.source_classes, dtype=np.int64)
        for j, g in enumerate(lens.groups):
            lookup[list(g)] = j
        return lookup[y]
    order = _ranking(p, lens.k)
    hit = order == y[:, None]
    # position i+1 of the matching rank, 0 when the label is outside the top k
    return np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, 0)


def induced_prediction(lens: Lens, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise DimensionMismatch(f"expected a single vector, got shape {mu.shape}")
    out = induced_predictions(lens, mu[None, :])[0]
    out.setflags(write=False)
    return out


def induced_outcome(lens: Lens, y: int, mu) -> int:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise DimensionMismatch(f"expected a single vector, got shape {mu.shape}")
    return int(induced_labels(lens, np.array([y]), mu[None, :])[0])


def apply_lens(lens: Lens, data: LabeledDataset) -> LabeledDataset:
    """Induced dataset: each prediction pushed forward, each label mapped."""
    if lens.kind == CANONICAL:
        _check_dim(lens, data.m)
        return data
    p = induced_predictions(lens, data.predictions)
    y = induced_labels(lens, data.labels, data.predictions)
    return LabeledDataset(p, y)
