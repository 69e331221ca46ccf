"""Min-Max, l1 and l2 normalization.

Min-Max is per feature and fitted on the training split only. l1 and l2
rescale each sample (row) to unit norm and need no fitting.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Dataset, SplitDataset
from .errors import DimensionMismatch


class Kind(str, Enum):
    MINMAX = "minmax"
    L1 = "l1"
    L2 = "l2"


KINDS = tuple(k.value for k in Kind)


@dataclass(frozen=True, eq=False)
class NormalizationMethod:
    kind: Kind
    mins: np.ndarray | None = None
    maxs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.MINMAX and self.mins is not None:
            if np.any(self.maxs < self.mins):
                raise ValueError("fitted max below min")

    @property
    def fitted(self) -> bool:
        return self.kind is not Kind.MINMAX or self.mins is not None


def fit_min_max(train: Dataset) -> NormalizationMethod:
    if train.n == 0:
        raise ValueError("cannot fit Min-Max on an empty dataset")
    mins = train.X.min(axis=0)
    maxs = train.X.max(axis=0)
    mins.setflags(write=False)
    maxs.setflags(write=False)
    return NormalizationMethod(Kind.MINMAX, mins, maxs)


def fit(kind, train: Dataset) -> NormalizationMethod:
    kind = Kind(kind)
    if kind is Kind.MINMAX:
        return fit_min_max(train)
    return NormalizationMethod(kind)


def _row_scale(X, norms):
    out = X.copy()
    nz = norms > 0
    out[nz] = X[nz] / norms[nz, None]
    return out


def transform_array(method: NormalizationMethod, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if method.kind is Kind.MINMAX:
        if not method.fitted:
            raise ValueError("Min-Max method used before fitting")
        if X.shape[1] != method.mins.shape[0]:
            raise DimensionMismatch(
                f"fitted on {method.mins.shape[0]} features, got {X.shape[1]}")
        span = method.maxs - method.mins
        safe = np.where(span > 0, span, 1.0)
        # constant features map to 0
        return np.where(span > 0, (X - method.mins) / safe, 0.0)
    if method.kind is Kind.L1:
        return _row_scale(X, np.abs(X).sum(axis=1))
    return _row_scale(X, np.sqrt((X * X).sum(axis=1)))


def transform(method: NormalizationMethod, ds: Dataset) -> Dataset:
    return ds.with_features(transform_array(method, ds.X))


def normalize_split(kind, split: SplitDataset) -> SplitDataset:
    """Fit on train, apply to both sides."""
    method = fit(kind, split.train)
    return SplitDataset(transform(method, split.train), transform(method, split.test),
                        split.seed, split.ratio, split.train_idx, split.test_idx)
