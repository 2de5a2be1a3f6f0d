"""Dataset ingestion, splitting and standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised when a dataset cannot be ingested or split."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with integer class ids in ``{0..n_classes-1}``.

    ``indices`` records the row ids of the source dataset (split metadata),
    ``classes`` the original label values in class-id order.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    classes: tuple = ()
    indices: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[0] < 1:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise DataError("labels must be integer class ids")
        y = y.astype(np.int64)
        if self.n_classes < 1 or y.min() < 0 or y.max() >= self.n_classes:
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        idx = np.arange(X.shape[0]) if self.indices is None else np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "indices", _readonly(idx))
        if not self.classes:
            object.__setattr__(self, "classes", tuple(range(self.n_classes)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows, name: str | None = None) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(
            self.features[rows],
            self.labels[rows],
            self.n_classes,
            self.classes,
            self.indices[rows],
            self.name if name is None else name,
        )

    def with_features(self, features) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.n_classes, self.classes, self.indices, self.name)

    def signed_labels(self) -> np.ndarray:
        """Binary labels as -1/+1 (class id 1 is the positive class)."""
        if self.n_classes != 2:
            raise DataError(f"signed labels need a binary dataset, got {self.n_classes} classes")
        return np.where(self.labels == 1, 1.0, -1.0)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    valid_fraction: float
    test_fraction: float
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.valid_fraction, self.test_fraction)
        if not all(0.0 < f < 1.0 for f in fr):
            raise DataError(f"split fractions must lie in (0, 1), got {fr}")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise DataError(f"split fractions must sum to 1, got {sum(fr)!r}")

    @classmethod
    def holdout_then_validation(cls, test: float = 0.25, valid_of_train: float = 0.2, seed: int = 0) -> "SplitSpec":
        """75/25 train/test, then a fraction of the train part held out for validation."""
        valid = (1.0 - test) * valid_of_train
        return cls(1.0 - test - valid, valid, test, seed)


def _parse_label(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        v = float(cell)
    except ValueError:
        return cell
    if v.is_integer():
        return int(v)
    return cell


def load_csv(path, label_column: int = -1, header: bool = False, name: str | None = None) -> LabeledDataset:
    """Read a comma-separated file with one label column.

    Integer labels are re-indexed in sorted order, anything else by order of
    first appearance.
    """
    path = Path(path)
    rows: list[list[float]] = []
    raw_labels = []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, cells in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not cells or all(not c.strip() for c in cells):
                continue
            if width is None:
                width = len(cells)
                if width < 2:
                    raise DataError(f"{path}:{lineno}: need at least one feature and one label column")
                lc = label_column % width
            elif len(cells) != width:
                raise DataError(f"{path}:{lineno}: ragged row, expected {width} cells, got {len(cells)}")
            feats = []
            for col, cell in enumerate(cells):
                if col == lc:
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{lineno}:{col + 1}: cannot parse {cell.strip()!r} as a number") from None
            rows.append(feats)
            raw_labels.append(_parse_label(cells[lc].strip()))
    if not rows:
        raise DataError(f"{path}: no data rows")

    if all(isinstance(v, int) for v in raw_labels):
        classes = tuple(sorted(set(raw_labels)))
    else:
        classes = tuple(dict.fromkeys(raw_labels))
    if len(classes) < 2:
        raise DataError(f"{path}: degenerate dataset, only one class present")
    lookup = {c: i for i, c in enumerate(classes)}
    labels = np.array([lookup[v] for v in raw_labels], dtype=np.int64)
    return LabeledDataset(np.array(rows, dtype=np.float64), labels, len(classes), classes, name=name or path.stem)


def _split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    # held-out parts round up, e.g. 569 rows -> 340/86/143 for the 75/25 then 20% protocol
    n_test = math.ceil(spec.test_fraction * n - 1e-9)
    n_valid = math.ceil(spec.valid_fraction * n - 1e-9)
    return n - n_valid - n_test, n_valid, n_test


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Seeded random partition into train, validation and test parts."""
    if ds.n < 10:
        raise DataError(f"need at least 10 rows to split, got {ds.n}")
    sizes = _split_sizes(ds.n, spec)
    if min(sizes) < 1:
        raise DataError(f"split sizes {sizes} contain an empty part")
    perm = np.random.Generator(np.random.Philox(spec.seed)).permutation(ds.n)
    bounds = np.cumsum((0,) + sizes)
    parts = []
    for part, lo, hi in zip(("train", "valid", "test"), bounds[:-1], bounds[1:]):
        rows = perm[lo:hi]
        missing = set(range(ds.n_classes)) - set(np.unique(ds.labels[rows]).tolist())
        if missing:
            raise DataError(f"{part} split misses classes {sorted(missing)} (seed={spec.seed})")
        parts.append(ds.subset(rows, name=f"{ds.name}:{part}" if ds.name else part))
    return tuple(parts)


def standardize(train: LabeledDataset, others: Sequence[LabeledDataset] = ()):
    """Center and scale columns with train statistics.

    Returns ``(train_std, others_std, mean, scale)``. Columns whose train std
    is below 1e-12 are only centered (scale 1).
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    scale = np.where(std < 1e-12, 1.0, std)
    tr = train.with_features((train.features - mean) / scale)
    rest = [o.with_features((o.features - mean) / scale) for o in others]
    return tr, rest, mean, scale


def label_agreement(y, y_prime):
    """+1 where the class ids agree, -1 otherwise (broadcasts over arrays)."""
    out = np.where(np.asarray(y) == np.asarray(y_prime), 1.0, -1.0)
    return float(out) if out.ndim == 0 else out
