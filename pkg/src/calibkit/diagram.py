"""Reliability diagrams.

``Diagram1D`` plots, per bin, the deviation ``r_hat - g_hat`` of the
tracked (last) component against the bin's average prediction, with the
prediction histogram and optional consistency bands.  ``DiagramSimplex``
draws, for three-class problems, one arrow per nonempty bin from the
average prediction to the empirical outcome distribution.

Both render to standalone SVG.  Rendering is a pure function of the
diagram and the :class:`Style`; all numbers are printed with fixed
precision so output is byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .binning import Partition, SimplexGrid, barycentric_to_cartesian
from .errors import DimensionMismatch
from .estimator import bin_statistics
from .types import LabeledDataset

# viridis sampled at 0, .25, .5, .75, 1
VIRIDIS_STOPS = (
    (0.00, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.50, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.00, (253, 231, 37)),
)


@dataclass(frozen=True)
class Style:
    width: int = 640
    height: int = 480
    margin: int = 50
    deviation_color: str = "#000000"
    histogram_color: str = "#1f77b4"
    band_color: str = "#d62728"
    analytic_color: str = "#2ca02c"
    arrow_color: str = "#000000"
    color_stops: tuple = VIRIDIS_STOPS
    precision: int = 3


def ramp_color(value: float, stops=VIRIDIS_STOPS) -> str:
    """Linear interpolation in RGB between the stops; value clipped to [0, 1]."""
    v = min(max(float(value), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(stops[:-1], stops[1:]):
        if v <= t1:
            w = 0.0 if t1 == t0 else (v - t0) / (t1 - t0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*stops[-1][1])


@dataclass(frozen=True)
class Bin1D:
    index: int
    interval: tuple[float, float]
    prediction: float
    deviation: float
    count: int
    band: tuple[float, float] | None = None

    def to_dict(self):
        return {
            "index": self.index,
            "interval": list(self.interval),
            "prediction": self.prediction,
            "deviation": self.deviation,
            "count": self.count,
            "band": None if self.band is None else list(self.band),
        }


@dataclass(frozen=True)
class Diagram1D:
    bins: list[Bin1D]
    histogram: list[int]
    edges: list[float]
    analytic: list[tuple[float, float]] | None = None
    n: int = 0

    kind = "reliability_1d"

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "edges": list(self.edges),
            "histogram": list(self.histogram),
            "bins": [b.to_dict() for b in self.bins],
            "analytic": None if self.analytic is None else [list(p) for p in self.analytic],
        }


@dataclass(frozen=True)
class Arrow:
    bin_index: int
    tail: tuple[float, float, float]
    head: tuple[float, float, float]
    p_hat: float
    count: int

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.head, self.tail)))

    def to_dict(self):
        return {"bin": self.bin_index, "tail": list(self.tail), "head": list(self.head),
                "p_hat": self.p_hat, "count": self.count}


@dataclass(frozen=True)
class DiagramSimplex:
    arrows: list[Arrow]
    cells: list = field(default_factory=list)
    cell_p_hat: list[float] = field(default_factory=list)
    labels: tuple[str, str, str] = ("0", "1", "2")
    n: int = 0

    kind = "reliability_simplex"

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "labels": list(self.labels),
            "arrows": [a.to_dict() for a in self.arrows],
            "cells": [
                {"bin": idx, "orientation": orient, "vertices": [list(v) for v in verts],
                 "p_hat": p}
                for (idx, orient, verts), p in zip(self.cells, self.cell_p_hat)
            ],
        }


def _interval(partition: Partition, i: int):
    if hasattr(partition, "interval"):
        return tuple(float(x) for x in partition.interval(i))
    return (0.0, 1.0)


def build_diagram_1d(data: LabeledDataset, partition: Partition, bands=None,
                     analytic=None) -> Diagram1D:
    """Deviation diagram of a binary (possibly lens-induced) dataset.

    ``bands`` is an optional ``(lo, hi)`` pair of per-bin arrays as
    returned by :func:`calibkit.resample.consistency_bands`.  ``analytic``
    is an optional list of ``(prediction, deviation)`` samples of the true
    deviation curve.
    """
    if data.m != 2:
        raise DimensionMismatch(f"1-d diagram needs binary predictions, got m={data.m}")
    if not partition.is_1d:
        raise DimensionMismatch("1-d diagram needs a 1-d partition")
    stats = bin_statistics(data, partition)
    bins = []
    for b in stats:
        if not b.count:
            continue
        band = None
        if bands is not None:
            lo, hi = float(bands[0][b.bin_index]), float(bands[1][b.bin_index])
            if np.isfinite(lo) and np.isfinite(hi):
                band = (lo, hi)
        bins.append(Bin1D(
            index=b.bin_index,
            interval=_interval(partition, b.bin_index),
            prediction=float(b.g_hat[-1]),
            deviation=float(b.r_hat[-1] - b.g_hat[-1]),
            count=b.count,
            band=band,
        ))
    edges = [0.0] + [float(e) for e in partition.edges_1d()] + [1.0]
    return Diagram1D(bins, [b.count for b in stats], edges,
                     None if analytic is None else [tuple(map(float, p)) for p in analytic],
                     data.n)


def build_diagram_simplex(data: LabeledDataset, partition: SimplexGrid,
                          labels=("0", "1", "2")) -> DiagramSimplex:
    if data.m != 3:
        raise DimensionMismatch(f"simplex diagram needs 3 classes, got m={data.m}")
    if not isinstance(partition, SimplexGrid):
        raise DimensionMismatch("simplex diagram needs a grid partition")
    stats = bin_statistics(data, partition)
    arrows = [
        Arrow(b.bin_index, tuple(map(float, b.g_hat)), tuple(map(float, b.r_hat)),
              b.p_hat, b.count)
        for b in stats if b.count
    ]
    return DiagramSimplex(arrows, partition.cells(), [b.p_hat for b in stats],
                          tuple(labels), data.n)


class _Svg:
    def __init__(self, style: Style):
        self.style = style
        self.parts = []

    def f(self, x: float) -> str:
        s = f"{x:.{self.style.precision}f}"
        if "." in s:
            s = s.rstrip("0").rstrip(".")
        return "0" if s in ("-0", "") else s

    def add(self, text: str):
        self.parts.append(text)

    def document(self) -> str:
        w, h = self.style.width, self.style.height
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _render_1d(d: Diagram1D, style: Style) -> str:
    svg = _Svg(style)
    f = svg.f
    m = style.margin
    w = style.width - 2 * m
    h = style.height - 2 * m
    top_h = 0.65 * h
    hist_top = m + 0.72 * h
    hist_h = h - 0.72 * h

    devs = [abs(b.deviation) for b in d.bins]
    devs += [abs(v) for b in d.bins if b.band for v in b.band]
    if d.analytic:
        devs += [abs(p[1]) for p in d.analytic]
    span = max([0.05] + devs) * 1.1
    zero_y = m + top_h / 2

    def sx(t):
        return m + w * t

    def sy(dev):
        return zero_y - (top_h / 2) * dev / span

    svg.add(f'<g id="axes" stroke="#000000" stroke-width="1" fill="none">')
    svg.add(f'<line x1="{f(sx(0))}" y1="{f(zero_y)}" x2="{f(sx(1))}" y2="{f(zero_y)}"/>')
    svg.add(f'<line x1="{f(sx(0))}" y1="{f(m)}" x2="{f(sx(0))}" y2="{f(m + top_h)}"/>')
    svg.add(f'<line x1="{f(sx(0))}" y1="{f(hist_top + hist_h)}" x2="{f(sx(1))}" '
            f'y2="{f(hist_top + hist_h)}"/>')
    svg.add("</g>")
    svg.add(f'<text x="{f(sx(0) - 5)}" y="{f(sy(span / 1.1))}" font-size="10" '
            f'text-anchor="end">{f(span / 1.1)}</text>')
    svg.add(f'<text x="{f(sx(0) - 5)}" y="{f(zero_y)}" font-size="10" '
            f'text-anchor="end">0</text>')
    svg.add(f'<text x="{f(sx(0.5))}" y="{f(style.height - 10)}" font-size="12" '
            f'text-anchor="middle">prediction</text>')

    total = max(sum(d.histogram), 1)
    peak = max(d.histogram + [1]) / total
    svg.add(f'<g id="histogram" fill="{style.histogram_color}" stroke="none">')
    for lo, hi, c in zip(d.edges[:-1], d.edges[1:], d.histogram):
        bh = hist_h * (c / total) / peak
        svg.add(f'<rect x="{f(sx(lo))}" y="{f(hist_top + hist_h - bh)}" '
                f'width="{f(sx(hi) - sx(lo))}" height="{f(bh)}"/>')
    svg.add("</g>")

    svg.add(f'<g id="bands" stroke="{style.band_color}" stroke-width="2">')
    for b in d.bins:
        if b.band is None:
            continue
        x = sx(b.prediction)
        svg.add(f'<line x1="{f(x)}" y1="{f(sy(b.band[0]))}" x2="{f(x)}" '
                f'y2="{f(sy(b.band[1]))}"/>')
    svg.add("</g>")

    if d.analytic:
        pts = " ".join(f"{f(sx(t))},{f(sy(v))}" for t, v in d.analytic)
        svg.add(f'<polyline id="analytic" points="{pts}" fill="none" '
                f'stroke="{style.analytic_color}" stroke-width="1.5"/>')

    svg.add(f'<g id="deviations" stroke="{style.deviation_color}" stroke-width="1.5">')
    r = 4
    for b in d.bins:
        x, y = sx(b.prediction), sy(b.deviation)
        svg.add(f'<path d="M{f(x - r)},{f(y - r)}L{f(x + r)},{f(y + r)}'
                f'M{f(x - r)},{f(y + r)}L{f(x + r)},{f(y - r)}"/>')
    svg.add("</g>")
    return svg.document()


def _render_simplex(d: DiagramSimplex, style: Style) -> str:
    svg = _Svg(style)
    f = svg.f
    m = style.margin
    side = min(style.width - 2 * m, (style.height - 2 * m) * 2 / sqrt(3))
    base_y = style.height - m

    def pt(bary):
        x, y = barycentric_to_cartesian(bary)
        return m + side * x, base_y - side * y

    peak = max(d.cell_p_hat + [0.0])
    svg.add('<g id="cells" stroke="#ffffff" stroke-width="0.5">')
    for (idx, _orient, verts), p in zip(d.cells, d.cell_p_hat):
        if p <= 0.0:
            continue
        pts = " ".join(f"{f(x)},{f(y)}" for x, y in map(pt, verts))
        color = ramp_color(p / peak if peak > 0 else 0.0, style.color_stops)
        svg.add(f'<polygon data-bin="{idx}" points="{pts}" fill="{color}"/>')
    svg.add("</g>")

    corners = [pt((1, 0, 0)), pt((0, 1, 0)), pt((0, 0, 1))]
    pts = " ".join(f"{f(x)},{f(y)}" for x, y in corners)
    svg.add(f'<polygon id="outline" points="{pts}" fill="none" stroke="#000000" '
            f'stroke-width="1"/>')
    anchors = ("end", "start", "middle")
    offsets = ((-6, 14), (6, 14), (0, -8))
    for (x, y), label, anchor, (dx, dy) in zip(corners, d.labels, anchors, offsets):
        svg.add(f'<text x="{f(x + dx)}" y="{f(y + dy)}" font-size="12" '
                f'text-anchor="{anchor}">{label}</text>')

    svg.add(f'<g id="arrows" stroke="{style.arrow_color}" stroke-width="1" '
            f'fill="{style.arrow_color}">')
    for a in d.arrows:
        x0, y0 = pt(a.tail)
        x1, y1 = pt(a.head)
        dx, dy = x1 - x0, y1 - y0
        length = sqrt(dx * dx + dy * dy)
        svg.add(f'<line data-bin="{a.bin_index}" x1="{f(x0)}" y1="{f(y0)}" '
                f'x2="{f(x1)}" y2="{f(y1)}"/>')
        if length > 1e-9:
            ux, uy = dx / length, dy / length
            hl = min(6.0, 0.5 * length + 2.0)
            bx, by = x1 - hl * ux, y1 - hl * uy
            px, py = -uy * hl * 0.4, ux * hl * 0.4
            svg.add(f'<polygon points="{f(x1)},{f(y1)} {f(bx + px)},{f(by + py)} '
                    f'{f(bx - px)},{f(by - py)}"/>')
        else:
            svg.add(f'<circle cx="{f(x0)}" cy="{f(y0)}" r="1.5"/>')
    svg.add("</g>")
    return svg.document()


def render_svg(diagram, style: Style | None = None) -> str:
    style = style or Style()
    if isinstance(diagram, Diagram1D):
        return _render_1d(diagram, style)
    if isinstance(diagram, DiagramSimplex):
        return _render_simplex(diagram, style)
    raise TypeError(f"cannot render {type(diagram).__name__}")
