"""Exhaustive enumeration of every feature subset.

The ranking is the yardstick the RL search is measured against. It goes
through ``FeatureSelectionEnv.evaluate_subset``, so its rewards are the
agent's rewards by construction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .dataset import Dataset
from .env import FeatureSelectionEnv, FeatureSubset, RewardCache, RewardConfig
from .errors import DimensionMismatch, TooManyFeatures
from .tree import TreeParams

MAX_FEATURES = 20


@dataclass(frozen=True)
class RankedSubset:
    subset: FeatureSubset
    accuracy: float
    reward: float


@dataclass(frozen=True)
class OracleResult:
    ranking: tuple[RankedSubset, ...]
    best_valid: RankedSubset | None

    def reward_of(self, subset: FeatureSubset) -> float:
        for entry in self.ranking:
            if entry.subset == subset:
                return entry.reward
        raise KeyError(subset.bitstring)


def search_env(env: FeatureSelectionEnv) -> OracleResult:
    d = env.d
    if d > MAX_FEATURES:
        raise TooManyFeatures(f"{d} features; exhaustive search is capped at {MAX_FEATURES}")
    entries = []
    for value in range(1 << d):
        subset = FeatureSubset.from_value(value, d)
        acc, reward = env.evaluate_subset(subset)
        entries.append(RankedSubset(subset, acc, reward))
    # stable sort keeps ascending mask value within equal rewards
    entries.sort(key=lambda e: -e.reward)
    best = next((e for e in entries if e.subset.is_valid), None)
    return OracleResult(tuple(entries), best)


def exhaustive_search(train: Dataset, eval_set: Dataset,
                      tree_params: TreeParams | None = None,
                      rc: RewardConfig | None = None,
                      cache: RewardCache | None = None) -> OracleResult:
    if train.d > MAX_FEATURES:
        raise TooManyFeatures(f"{train.d} features; exhaustive search is capped at {MAX_FEATURES}")
    return search_env(FeatureSelectionEnv(train, eval_set, tree_params, rc, cache))


def percentile_of(subset: FeatureSubset, result: OracleResult) -> float:
    """Fraction of all subsets whose reward is strictly lower."""
    d = len(result.ranking[0].subset)
    if len(subset) != d:
        raise DimensionMismatch(f"subset covers {len(subset)} features, ranking {d}")
    own = result.reward_of(subset)
    lower = sum(1 for e in result.ranking if e.reward < own)
    return lower / len(result.ranking)


def ranking_csv(result: OracleResult, feature_names=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "subset_bitstring", "size", "valid", "accuracy", "reward", "features"])
    for rank, e in enumerate(result.ranking, start=1):
        names = e.subset.names(feature_names) if feature_names else map(str, e.subset.indices)
        w.writerow([rank, e.subset.bitstring, e.subset.size, int(e.subset.is_valid),
                    repr(e.accuracy), repr(e.reward), ";".join(names)])
    return buf.getvalue()
