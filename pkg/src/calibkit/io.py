"""Reading and writing prediction datasets.

CSV files have a header ``p0,p1,...,p{m-1},label`` and one example per row.
JSONL files hold one object per line: ``{"p": [...], "y": ...}``.  Labels
are integer class indices or class names; names are mapped to indices in
order of first appearance.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, InconsistentWidth, ParseError, RejectedRow, RejectedVector
from .types import DEFAULT_TOLERANCE, LabeledDataset, validate_simplex

_PCOL = re.compile(r"^p(\d+)$")


def _detect_format(path: Path, fmt: str | None) -> str:
    if fmt:
        fmt = fmt.lower()
        if fmt not in ("csv", "jsonl"):
            raise ParseError(f"unknown format {fmt!r}", path)
        return fmt
    return "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"


class _Labels:
    """Collects raw labels; integers unless any label is a non-integer name."""

    def __init__(self):
        self.raw = []

    def add(self, value):
        self.raw.append(value)

    def resolve(self, m: int, path, lines):
        as_int = []
        for v in self.raw:
            if isinstance(v, bool):
                break
            if isinstance(v, int):
                as_int.append(v)
                continue
            if isinstance(v, float) and v.is_integer():
                as_int.append(int(v))
                continue
            if isinstance(v, str) and re.fullmatch(r"[+-]?\d+", v.strip()):
                as_int.append(int(v))
                continue
            break
        else:
            for y, line in zip(as_int, lines):
                if not 0 <= y < m:
                    raise ParseError(f"label {y} outside 0..{m - 1}", path, line, "label")
            return np.array(as_int, dtype=np.int64), None
        names = {}
        idx = []
        for v, line in zip(self.raw, lines):
            key = str(v)
            if key not in names:
                names[key] = len(names)
            idx.append(names[key])
        if len(names) > m:
            raise ParseError(f"{len(names)} distinct class names but only {m} prediction columns",
                             path, lines[-1], "label")
        return np.array(idx, dtype=np.int64), tuple(names)


def _validated(raw, path, line, tolerance):
    try:
        return validate_simplex(raw, tolerance)
    except RejectedVector as err:
        raise RejectedRow(str(err), path, line, "p") from None


def _read_csv(path: Path, tolerance: float):
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: empty file") from None
        if "label" not in header:
            raise ParseError("header has no 'label' column", path, 1, "label")
        pcols = sorted((int(mt.group(1)), i) for i, h in enumerate(header)
                       if (mt := _PCOL.match(h)))
        if [k for k, _ in pcols] != list(range(len(pcols))) or len(pcols) < 2:
            raise ParseError("header must name columns p0, p1, ..., p{m-1}", path, 1)
        m = len(pcols)
        label_col = header.index("label")
        preds, labels, lines = [], _Labels(), []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InconsistentWidth(
                    f"{len(row)} fields but header has {len(header)}", path, line_no)
            raw = []
            for k, i in pcols:
                try:
                    raw.append(float(row[i]))
                except ValueError:
                    raise ParseError(f"not a number: {row[i]!r}", path, line_no,
                                     f"p{k}") from None
            preds.append(_validated(raw, path, line_no, tolerance))
            label = row[label_col].strip()
            if not label:
                raise ParseError("missing label", path, line_no, "label")
            labels.add(label)
            lines.append(line_no)
    return preds, labels, lines, m


def _read_jsonl(path: Path, tolerance: float):
    preds, labels, lines = [], _Labels(), []
    m = None
    with path.open() as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as err:
                raise ParseError(f"invalid JSON: {err.msg}", path, line_no) from None
            if not isinstance(obj, dict) or "p" not in obj or "y" not in obj:
                raise ParseError('expected an object with keys "p" and "y"', path, line_no)
            p = obj["p"]
            if not isinstance(p, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in p):
                raise ParseError("prediction must be a list of numbers", path, line_no, "p")
            if m is None:
                m = len(p)
            elif len(p) != m:
                raise InconsistentWidth(f"prediction has {len(p)} components, expected {m}",
                                        path, line_no, "p")
            preds.append(_validated(p, path, line_no, tolerance))
            y = obj["y"]
            if not isinstance(y, (int, str)) or isinstance(y, bool):
                raise ParseError("label must be an integer or a string", path, line_no, "y")
            labels.add(y)
            lines.append(line_no)
    return preds, labels, lines, m


def parse_dataset_file(path, fmt: str | None = None,
                       tolerance: float = DEFAULT_TOLERANCE) -> LabeledDataset:
    """Read a CSV or JSONL prediction file into a dataset.

    The format is taken from ``fmt`` or else from the file extension.
    Errors carry the file name, line number and offending field.
    """
    path = Path(path)
    kind = _detect_format(path, fmt)
    try:
        reader = _read_csv if kind == "csv" else _read_jsonl
        preds, labels, lines, m = reader(path, tolerance)
    except OSError as err:
        raise ParseError(f"cannot read file: {err.strerror}", path) from None
    if not preds:
        raise EmptyDataset(f"{path}: no data rows")
    y, names = labels.resolve(m, path, lines)
    return LabeledDataset(np.stack(preds), y, names)


def write_csv(data: LabeledDataset, target, precision: int = 17) -> None:
    """Write a dataset in the CSV layout read by :func:`parse_dataset_file`.

    ``target`` is a path or an open text stream.
    """
    if hasattr(target, "write"):
        _write_rows(data, target, precision)
        return
    with Path(target).open("w", newline="") as fh:
        _write_rows(data, fh, precision)


def _write_rows(data, fh, precision):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"p{k}" for k in range(data.m)] + ["label"])
    for p, y in zip(data.predictions, data.labels):
        w.writerow([format(float(v), f".{precision}g") for v in p] + [int(y)])
