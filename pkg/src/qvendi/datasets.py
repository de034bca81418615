"""CSV dataset files: ``x0..x{d-1}`` feature columns plus optional ``label`` or ``value``."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

_FEATURE = re.compile(r"x(\d+)$")


class DatasetError(ValueError):
    """Malformed dataset file; the message carries the offending line number."""


@dataclass
class Dataset:
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] == 0 or self.points.shape[1] == 0:
            raise DatasetError("dataset needs at least one row and one feature column")
        n = self.points.shape[0]
        for name in ("labels", "values"):
            col = getattr(self, name)
            if col is not None:
                col = np.asarray(col, dtype=float).reshape(-1)
                if col.size != n:
                    raise DatasetError(f"{name} column has {col.size} entries for {n} rows")
                setattr(self, name, col)
        if self.labels is not None and not np.all((self.labels == 0) | (self.labels == 1)):
            raise DatasetError("labels must be 0 or 1")

    @property
    def mode(self) -> str:
        if self.labels is not None:
            return "binary-pool"
        if self.values is not None:
            return "real-valued-pool"
        return "unlabeled"

    def __len__(self) -> int:
        return self.points.shape[0]


def _header(fields: list[str], where: str) -> tuple[list[int], Optional[int], Optional[int]]:
    features, label, value = {}, None, None
    for j, name in enumerate(fields):
        name = name.strip()
        m = _FEATURE.match(name)
        if m:
            features[int(m.group(1))] = j
        elif name == "label":
            label = j
        elif name == "value":
            value = j
        else:
            raise DatasetError(f"{where}:1: unknown column {name!r}")
    d = len(features)
    if d == 0:
        raise DatasetError(f"{where}:1: no feature columns x0..x{{d-1}}")
    if sorted(features) != list(range(d)):
        raise DatasetError(f"{where}:1: feature columns must be exactly x0..x{d - 1}")
    return [features[i] for i in range(d)], label, value


def _real(token: str, where: str, line: int, column: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise DatasetError(f"{where}:{line}: column {column}: {token!r} is not a number") from None
    if not math.isfinite(v):
        raise DatasetError(f"{where}:{line}: column {column}: value must be finite")
    return v


def parse_dataset(text: str, where: str = "<string>") -> Dataset:
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise DatasetError(f"{where}:1: empty file") from None
    feat_cols, label_col, value_col = _header(header, where)
    width = len(header)
    points, labels, values = [], [], []
    for line, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != width:
            raise DatasetError(f"{where}:{line}: expected {width} fields, got {len(row)}")
        points.append([_real(row[j], where, line, header[j]) for j in feat_cols])
        if label_col is not None:
            tok = row[label_col].strip()
            if tok not in ("0", "1", "0.0", "1.0"):
                raise DatasetError(f"{where}:{line}: label must be 0 or 1, got {tok!r}")
            labels.append(float(tok))
        if value_col is not None:
            values.append(_real(row[value_col], where, line, "value"))
    if not points:
        raise DatasetError(f"{where}:2: no data rows")
    return Dataset(
        np.array(points),
        np.array(labels) if label_col is not None else None,
        np.array(values) if value_col is not None else None,
    )


def read_dataset(path: Union[str, Path]) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DatasetError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_dataset(text, str(path))


def format_dataset(data: Dataset) -> str:
    """CSV text; floats go through ``repr`` so a reload is bit-exact."""
    d = data.points.shape[1]
    header = [f"x{i}" for i in range(d)]
    if data.labels is not None:
        header.append("label")
    if data.values is not None:
        header.append("value")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for i, row in enumerate(data.points):
        fields = [repr(float(v)) for v in row]
        if data.labels is not None:
            fields.append(str(int(data.labels[i])))
        if data.values is not None:
            fields.append(repr(float(data.values[i])))
        w.writerow(fields)
    return out.getvalue()


def write_dataset(data: Dataset, path: Union[str, Path]) -> None:
    Path(path).write_text(format_dataset(data), encoding="utf-8")
