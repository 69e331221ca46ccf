"""Binary CART classifier with Gini impurity.

The tree supplies the accuracy signal for the feature-selection reward, so it
is deterministic: equal-quality splits resolve to the lowest feature index,
then the lowest threshold. Samples with ``x[feature] <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, EmptyNode, EmptyTrainingSet

_TOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple[int, int]

    @property
    def predicted_class(self) -> int:
        # even counts resolve to the negative class
        return int(self.class_counts[1] > self.class_counts[0])


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: Node
    right: Node


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    params: TreeParams
    n_features: int

    def depth(self) -> int:
        def walk(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                yield node
            else:
                stack.extend((node.right, node.left))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def gini(class_counts) -> float:
    n0, n1 = class_counts
    total = n0 + n1
    if total <= 0:
        raise EmptyNode("gini of an empty node")
    p0 = n0 / total
    p1 = n1 / total
    return 1.0 - p0 * p0 - p1 * p1


def _best_split_for_feature(col, y):
    """Lowest weighted child Gini over midpoint thresholds of one column.

    Returns (score, threshold) or None when the column is constant.
    """
    order = np.argsort(col, kind="stable")
    v = col[order]
    ys = y[order]
    cut = np.flatnonzero(v[:-1] < v[1:])
    if cut.size == 0:
        return None
    n = v.size
    ones = np.cumsum(ys)
    n_left = cut + 1.0
    n_right = n - n_left
    l1 = ones[cut].astype(np.float64)
    l0 = n_left - l1
    r1 = ones[-1] - l1
    r0 = n_right - r1
    # n_child * gini(child) = n_child - (c0^2 + c1^2) / n_child
    score = (n_left - (l0 * l0 + l1 * l1) / n_left
             + n_right - (r0 * r0 + r1 * r1) / n_right) / n
    best = score.min()
    k = int(np.flatnonzero(score <= best + _TOL)[0])
    lo, hi = v[cut[k]], v[cut[k] + 1]
    thr = (lo + hi) / 2.0
    if not thr < hi:
        thr = lo
    return float(score[k]), float(thr)


def _grow(X, y, depth, params):
    n1 = int(y.sum())
    counts = (int(y.size) - n1, n1)
    leaf = Leaf(counts)
    if counts[0] == 0 or counts[1] == 0:
        return leaf
    if y.size < params.min_samples_split:
        return leaf
    if params.max_depth is not None and depth >= params.max_depth:
        return leaf

    parent = gini(counts)
    best = None
    for j in range(X.shape[1]):
        found = _best_split_for_feature(X[:, j], y)
        if found is None:
            continue
        if best is None or found[0] < best[0] - _TOL:
            best = (found[0], j, found[1])
    if best is None or best[0] >= parent - _TOL:
        return leaf

    _, j, thr = best
    go_left = X[:, j] <= thr
    return Split(j, thr,
                 _grow(X[go_left], y[go_left], depth + 1, params),
                 _grow(X[~go_left], y[~go_left], depth + 1, params))


def fit(X, y, params: TreeParams | None = None) -> DecisionTree:
    params = params or TreeParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("need at least one training row")
    if X.shape[1] == 0:
        raise EmptyTrainingSet("need at least one feature")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch(f"y has shape {y.shape}, X has {X.shape[0]} rows")
    return DecisionTree(_grow(X, y, 0, params), params, X.shape[1])


def predict(tree: DecisionTree, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != tree.n_features:
        raise DimensionMismatch(
            f"tree trained on {tree.n_features} features, got {X.shape[1]}")
    out = np.empty(X.shape[0], dtype=np.int64)

    def route(node, idx):
        if idx.size == 0:
            return
        if isinstance(node, Leaf):
            out[idx] = node.predicted_class
            return
        left = X[idx, node.feature_index] <= node.threshold
        route(node.left, idx[left])
        route(node.right, idx[~left])

    route(tree.root, np.arange(X.shape[0]))
    return out


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise DimensionMismatch("label and prediction lengths differ")
    if y_true.size == 0:
        raise ValueError("cannot evaluate on an empty set")
    pos = y_true == 1
    hit = y_pred == 1
    return ConfusionMatrix(tp=int(np.sum(pos & hit)), fp=int(np.sum(~pos & hit)),
                           tn=int(np.sum(~pos & ~hit)), fn=int(np.sum(pos & ~hit)))


def evaluate(tree: DecisionTree, X, y) -> ConfusionMatrix:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty set")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X and y lengths differ")
    return confusion(y, predict(tree, X))
