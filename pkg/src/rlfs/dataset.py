"""CSV ingestion and deterministic stratified train/test splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSplit,
    DimensionMismatch,
    MissingColumn,
    MissingValue,
    NonNumericCell,
    SingleClass,
    TooFewRows,
    UnknownLabelValue,
)

BCCDS_COLUMNS = (
    "Age", "BMI", "Glucose", "Insulin", "HOMA", "Leptin",
    "Adiponectin", "Resistin", "MCP.1", "Classification",
)
BCCDS_LABEL = "Classification"
BCCDS_POSITIVE = "2"  # 1 = healthy control, 2 = patient


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with named columns and binary labels (1 = positive)."""

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X, np.float64)
        y = _frozen(self.y, np.int64)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"y has shape {y.shape}, X has {X.shape[0]} rows")
        if len(self.feature_names) != X.shape[1]:
            raise DimensionMismatch(
                f"{len(self.feature_names)} feature names for {X.shape[1]} columns")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def positives(self) -> int:
        return int(self.y.sum())

    def rows(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.feature_names, self.X[idx], self.y[idx])

    def with_features(self, X) -> Dataset:
        """Same labels and names, new feature values."""
        return Dataset(self.feature_names, X, self.y)


@dataclass(frozen=True, eq=False)
class SplitDataset:
    train: Dataset
    test: Dataset
    seed: int
    ratio: float
    train_idx: np.ndarray = field(repr=False)
    test_idx: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "train_idx", _frozen(self.train_idx, np.int64))
        object.__setattr__(self, "test_idx", _frozen(self.test_idx, np.int64))


def _same_label(a: str, b: str) -> bool:
    if a == b:
        return True
    try:
        return float(a) == float(b)
    except ValueError:
        return False


def load_csv(path, label_column: str = BCCDS_LABEL,
             positive_label: str = BCCDS_POSITIVE) -> Dataset:
    """Read a headed CSV whose non-label columns are all numeric.

    Rows are kept in file order. The label column must contain exactly two
    distinct values, one of which equals ``positive_label`` (numeric labels
    compare by value, so ``2`` and ``2.0`` match). A third value raises
    ``UnknownLabelValue``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TooFewRows(f"{path}: empty file") from None
        if label_column not in header:
            raise MissingColumn(label_column)
        label_pos = header.index(label_column)
        feature_cols = [i for i in range(len(header)) if i != label_pos]
        names = tuple(header[i] for i in feature_cols)
        if not names:
            raise TooFewRows(f"{path}: no feature columns")

        rows, labels = [], []
        negative_label = None
        # row numbers are 1-based data rows (header excluded)
        for rownum, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) < len(header):
                record = record + [""] * (len(header) - len(record))
            values = []
            for i in feature_cols:
                cell = record[i].strip()
                if cell == "":
                    raise MissingValue(rownum, header[i])
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCell(rownum, header[i], cell) from None
                if not math.isfinite(v):
                    raise NonNumericCell(rownum, header[i], cell)
                values.append(v)
            raw = record[label_pos].strip()
            if raw == "":
                raise MissingValue(rownum, label_column)
            if _same_label(raw, positive_label):
                labels.append(1)
            elif negative_label is None or _same_label(raw, negative_label):
                negative_label = raw
                labels.append(0)
            else:
                raise UnknownLabelValue(rownum, raw)
            rows.append(values)

    if len(rows) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, got {len(rows)}")
    y = np.array(labels)
    if y.min() == y.max():
        raise SingleClass(f"{path}: only one label class present")
    return Dataset(names, np.array(rows, dtype=np.float64), y)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def train_counts(class_counts, ratio: float) -> list[int]:
    """Per-class train sizes summing to round(ratio * n).

    Each class gets floor(ratio * count); leftover slots go to the classes
    with the largest fractional parts, lower class label first on ties.
    """
    n = sum(class_counts)
    total = _round_half_up(ratio * n)
    exact = [ratio * c for c in class_counts]
    counts = [min(int(math.floor(e)), c) for e, c in zip(exact, class_counts)]
    order = sorted(range(len(class_counts)), key=lambda k: (-(exact[k] - counts[k]), k))
    left = total - sum(counts)
    for k in order:
        if left <= 0:
            break
        if counts[k] < class_counts[k]:
            counts[k] += 1
            left -= 1
    return counts


def stratified_split(ds: Dataset, ratio: float = 0.9, seed: int = 0) -> SplitDataset:
    """Seeded per-class shuffle, then a per-class cut at ``train_counts``.

    Both index sets are returned sorted, so train/test keep file order.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    class_idx = [np.flatnonzero(ds.y == c) for c in (0, 1)]
    sizes = train_counts([len(ix) for ix in class_idx], ratio)

    train_parts, test_parts = [], []
    for ix, k in zip(class_idx, sizes):
        perm = rng.permutation(ix)
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))

    if train_idx.size == 0 or test_idx.size == 0:
        raise DegenerateSplit(
            f"ratio {ratio} on n={ds.n} leaves an empty side "
            f"(train={train_idx.size}, test={test_idx.size})")
    if len(np.unique(ds.y[train_idx])) < 2:
        raise DegenerateSplit("train side would contain a single class")

    return SplitDataset(ds.rows(train_idx), ds.rows(test_idx), seed, ratio,
                        train_idx, test_idx)
