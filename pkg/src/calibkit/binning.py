"""Partitions of the probability simplex into bins.

Three schemes:

``equal:N``
    N equal-width intervals on the last component of the prediction
    (for binary problems the probability of the positive class).  Bins are
    half-open ``[lo, hi)`` except the last, which is closed at 1.
``grid:K``
    For three classes, the simplex cut into K*K congruent triangles by lines
    parallel to its edges.
``data:T``
    Recursive splitting of the predictions: a cell holding more than T
    predictions is split at the mean of its highest-variance coordinate,
    points equal to the mean going left.  Binary predictions are split on
    the last component only.

Every partition assigns whole arrays of predictions at once via
:meth:`Partition.assign`.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidBinCount,
    InvalidSpec,
    OutOfRegion,
    UnsupportedDimension,
)

DEFAULT_THRESHOLD = 1000


class Partition:
    """Base class. Subclasses set ``m`` and ``n_bins`` and implement ``_assign``."""

    scheme: str
    m: int | None
    n_bins: int

    def assign(self, predictions) -> np.ndarray:
        """Bin index of every row of an ``(n, m)`` array."""
        p = np.asarray(predictions, dtype=float)
        if p.ndim == 1:
            p = p[None, :]
        if self.m is not None and p.shape[1] != self.m:
            raise DimensionMismatch(f"partition built for m={self.m}, got m={p.shape[1]}")
        return self._assign(p)

    def assign_bin(self, nu) -> int:
        return int(self.assign(np.asarray(nu, dtype=float)[None, :])[0])

    def _assign(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def edges_1d(self):
        """Sorted interior cut points on the tracked coordinate, for 1-d schemes."""
        raise UnsupportedDimension(f"{self.scheme} partition is not one-dimensional")

    @property
    def is_1d(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class EqualWidth1D(Partition):
    bin_count: int
    m: int | None = None
    scheme = "equal"

    def __post_init__(self):
        if int(self.bin_count) < 1:
            raise InvalidBinCount(f"bin_count must be >= 1, got {self.bin_count}")

    @property
    def n_bins(self) -> int:
        return int(self.bin_count)

    @property
    def is_1d(self) -> bool:
        return True

    def _assign(self, p):
        return bin_index_1d(p[:, -1], self.n_bins)

    def edges_1d(self):
        return [j / self.n_bins for j in range(1, self.n_bins)]

    def interval(self, i: int) -> tuple[float, float]:
        return i / self.n_bins, (i + 1) / self.n_bins

    def to_dict(self):
        return {"scheme": self.scheme, "bin_count": self.n_bins,
                "edges": [j / self.n_bins for j in range(self.n_bins + 1)]}


def bin_index_1d(values, bin_count: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    idx = np.floor(v * bin_count).astype(np.int64)
    # last bin closed at 1; tiny negatives from rounding go to bin 0
    return np.clip(idx, 0, bin_count - 1)


@dataclass(frozen=True, eq=False)
class SimplexGrid(Partition):
    """K*K triangles on the 2-simplex.

    With ``u = K * p[1]`` and ``v = K * p[2]``, row ``j = floor(v)`` is the
    horizontal band of the triangle; inside a row the cells alternate
    upward ``(i, j)`` and downward ``(i, j)`` triangles from left to right.
    Cell index = ``j * (2K - j) + 2i`` for upward and ``+ 1`` for downward
    triangles.  A point on a shared edge goes to the cell whose lower-left
    lattice corner is ``(floor(u), floor(v))``; points with
    ``frac(u) + frac(v) >= 1`` go to the downward cell.
    """

    subdivision: int
    m: int = 3
    scheme = "grid"

    def __post_init__(self):
        if self.m != 3:
            raise UnsupportedDimension(f"simplex grid needs m=3, got m={self.m}")
        if int(self.subdivision) < 1:
            raise InvalidBinCount(f"subdivision must be >= 1, got {self.subdivision}")

    @property
    def n_bins(self) -> int:
        return int(self.subdivision) ** 2

    def _assign(self, p):
        k = int(self.subdivision)
        u = k * p[:, 1]
        v = k * p[:, 2]
        i = np.clip(np.floor(u).astype(np.int64), 0, k - 1)
        j = np.clip(np.floor(v).astype(np.int64), 0, k - 1)
        # on the outer edge (class 0 mass zero) pull back inside the triangle
        over = i + j > k - 1
        j = np.where(over & (j > 0), k - 1 - i, j)
        i = np.where(i + j > k - 1, k - 1 - j, i)
        down = ((u - i) + (v - j) >= 1.0) & (i + j <= k - 2)
        return j * (2 * k - j) + 2 * i + down.astype(np.int64)

    def cells(self):
        """``(index, orientation, vertices)`` for every cell, in index order.

        Vertices are barycentric triples.
        """
        k = int(self.subdivision)

        def bary(a, b):
            return (1.0 - (a + b) / k, a / k, b / k)

        out = []
        for j in range(k):
            for i in range(k - j):
                base = j * (2 * k - j) + 2 * i
                out.append((base, "up", (bary(i, j), bary(i + 1, j), bary(i, j + 1))))
                if i + j <= k - 2:
                    out.append((base + 1, "down",
                                (bary(i + 1, j), bary(i + 1, j + 1), bary(i, j + 1))))
        out.sort(key=lambda c: c[0])
        return out

    def to_dict(self):
        return {"scheme": self.scheme, "subdivision": int(self.subdivision),
                "bin_count": self.n_bins}


@dataclass(frozen=True)
class _Node:
    # leaf when dim == -1; then ``leaf`` is the bin index
    dim: int
    threshold: float
    left: int
    right: int
    leaf: int


class DataDependent(Partition):
    """Recursive mean-split partition, stored as a binary tree of boxes.

    Leaves are numbered in depth-first, left-first order.  The root box is
    the unit cube over the split coordinates, so every valid prediction
    lands in exactly one leaf.
    """

    scheme = "data"

    def __init__(self, nodes, m: int, threshold: int, split_coords):
        self._nodes = tuple(nodes)
        self.m = m
        self.threshold = threshold
        self.split_coords = tuple(split_coords)
        self.n_bins = sum(1 for nd in self._nodes if nd.dim == -1)

    @property
    def is_1d(self) -> bool:
        return len(self.split_coords) == 1

    def _assign(self, p):
        x = p[:, list(self.split_coords)]
        out = np.full(x.shape[0], -1, dtype=np.int64)
        stack = [(0, np.arange(x.shape[0]))]
        while stack:
            node_id, rows = stack.pop()
            nd = self._nodes[node_id]
            if nd.dim == -1:
                out[rows] = nd.leaf
                continue
            go_left = x[rows, nd.dim] <= nd.threshold
            stack.append((nd.right, rows[~go_left]))
            stack.append((nd.left, rows[go_left]))
        if (out < 0).any():
            raise OutOfRegion("prediction outside the partition cover")
        return out

    def boxes(self):
        """Per leaf, ``(lo, hi)`` bounds over the split coordinates.

        A box contains ``x`` when ``lo < x <= hi`` in every coordinate, with
        ``lo == 0`` treated as closed.
        """
        d = len(self.split_coords)
        out = [None] * self.n_bins
        stack = [(0, np.zeros(d), np.ones(d))]
        while stack:
            node_id, lo, hi = stack.pop()
            nd = self._nodes[node_id]
            if nd.dim == -1:
                out[nd.leaf] = (lo.tolist(), hi.tolist())
                continue
            lhi = hi.copy()
            lhi[nd.dim] = nd.threshold
            rlo = lo.copy()
            rlo[nd.dim] = nd.threshold
            stack.append((nd.right, rlo, hi.copy()))
            stack.append((nd.left, lo.copy(), lhi))
        return out

    def edges_1d(self):
        if not self.is_1d:
            return super().edges_1d()
        return sorted(nd.threshold for nd in self._nodes if nd.dim != -1)

    def interval(self, i: int) -> tuple[float, float]:
        lo, hi = self.boxes()[i]
        return lo[0], hi[0]

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "threshold": self.threshold,
            "bin_count": self.n_bins,
            "coordinates": list(self.split_coords),
            "tree": [[nd.dim, nd.threshold, nd.left, nd.right, nd.leaf] for nd in self._nodes],
            "boxes": [{"lo": lo, "hi": hi} for lo, hi in self.boxes()],
        }


def build_equal_bins_1d(bin_count: int, m: int | None = None) -> EqualWidth1D:
    return EqualWidth1D(int(bin_count), m)


def build_simplex_grid(subdivision: int, m: int = 3) -> SimplexGrid:
    return SimplexGrid(int(subdivision), m)


def build_data_dependent_bins(predictions, threshold: int = DEFAULT_THRESHOLD) -> DataDependent:
    """Split cells holding more than ``threshold`` predictions at the mean
    of their highest-variance coordinate (ties to the lowest coordinate).

    A cell whose predictions are identical in every coordinate is never
    split.  The tree is built iteratively, so skewed data cannot exhaust
    the recursion limit.
    """
    p = np.asarray(predictions, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise EmptyInput("cannot build data-dependent bins from no predictions")
    if int(threshold) < 1:
        raise InvalidBinCount(f"threshold must be >= 1, got {threshold}")
    m = p.shape[1]
    coords = (m - 1,) if m == 2 else tuple(range(m))
    x = np.ascontiguousarray(p[:, list(coords)])

    # nodes are allocated in creation order; leaves numbered afterwards in
    # depth-first left-first order
    dims, thresholds, children = [], [], []
    pending = [(0, np.arange(x.shape[0]))]
    dims.append(-1)
    thresholds.append(0.0)
    children.append((-1, -1))
    while pending:
        node_id, rows = pending.pop()
        if rows.size <= threshold:
            continue
        cell = x[rows]
        var = cell.var(axis=0)
        dim = int(np.argmax(var))
        if var[dim] <= 0.0:
            continue
        cut = float(cell[:, dim].mean())
        go_left = cell[:, dim] <= cut
        n_left = int(go_left.sum())
        if n_left == 0 or n_left == rows.size:
            continue
        left_id = len(dims)
        right_id = left_id + 1
        dims += [-1, -1]
        thresholds += [0.0, 0.0]
        children += [(-1, -1), (-1, -1)]
        dims[node_id] = dim
        thresholds[node_id] = cut
        children[node_id] = (left_id, right_id)
        pending.append((right_id, rows[~go_left]))
        pending.append((left_id, rows[go_left]))

    leaf_of = {}
    stack = [0]
    while stack:
        nid = stack.pop()
        if dims[nid] == -1:
            leaf_of[nid] = len(leaf_of)
        else:
            stack.append(children[nid][1])
            stack.append(children[nid][0])
    nodes = [
        _Node(dims[i], thresholds[i], children[i][0], children[i][1], leaf_of.get(i, -1))
        for i in range(len(dims))
    ]
    return DataDependent(nodes, m, int(threshold), coords)


@dataclass(frozen=True)
class BinningSpec:
    """A binning rule that can be (re)built from predictions.

    ``equal`` and ``grid`` partitions do not depend on the data;
    ``data`` partitions are rebuilt from whatever predictions they are given.
    """

    scheme: str
    value: int

    @property
    def data_dependent(self) -> bool:
        return self.scheme == "data"

    def build(self, predictions=None, m: int | None = None) -> Partition:
        if predictions is not None:
            m = np.asarray(predictions).shape[-1]
        if self.scheme == "equal":
            return build_equal_bins_1d(self.value, m)
        if self.scheme == "grid":
            return build_simplex_grid(self.value, 3 if m is None else m)
        if predictions is None:
            raise EmptyInput("data-dependent bins need predictions")
        return build_data_dependent_bins(predictions, self.value)

    def spec(self) -> str:
        return f"{self.scheme}:{self.value}"


def parse_bins(text: str) -> BinningSpec:
    """Parse ``equal:N``, ``grid:K`` or ``data:THRESHOLD``."""
    head, sep, rest = text.strip().lower().partition(":")
    if head not in ("equal", "grid", "data") or not sep:
        raise InvalidSpec(f"unknown bins spec {text!r}; expected equal:N, grid:K or data:T")
    try:
        value = int(rest)
    except ValueError:
        raise InvalidSpec(f"bins spec {text!r} needs an integer after ':'") from None
    if value < 1:
        raise InvalidBinCount(f"bins spec {text!r} needs a positive integer")
    return BinningSpec(head, value)


def barycentric_to_cartesian(p) -> np.ndarray:
    """Map barycentric triples to the plane: class 0 at (0, 0), class 1 at
    (1, 0), class 2 at (1/2, sqrt(3)/2)."""
    p = np.asarray(p, dtype=float)
    x = p[..., 1] + 0.5 * p[..., 2]
    y = (sqrt(3.0) / 2.0) * p[..., 2]
    return np.stack([x, y], axis=-1)


def cartesian_to_barycentric(xy) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    c2 = xy[..., 1] * 2.0 / sqrt(3.0)
    c1 = xy[..., 0] - 0.5 * c2
    return np.stack([1.0 - c1 - c2, c1, c2], axis=-1)
