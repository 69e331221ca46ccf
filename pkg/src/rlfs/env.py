"""The feature-selection MDP.

State ``i`` is "decide about feature ``i``"; the two actions exclude or select
it. An episode visits features 0..d-1 in order, so the process is a
deterministic chain of length d and the completed decisions form a subset.
The reward is the accuracy of a decision tree trained on that subset, doubled
above a threshold, minus a flat punishment for the empty or full subset.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum, IntEnum

from .dataset import Dataset, SplitDataset, stratified_split
from .errors import DimensionMismatch, EmptySubset, StepOnTerminal
from .tree import ConfusionMatrix, TreeParams, evaluate, fit

HOLDOUT_FRACTION = 0.2


class Action(IntEnum):
    EXCLUDE = 0
    SELECT = 1


class RewardSplit(str, Enum):
    TEST = "test"
    TRAIN = "train"
    HOLDOUT = "holdout"


class RewardMode(str, Enum):
    TERMINAL = "terminal"
    PER_STEP = "per_step"


@dataclass(frozen=True)
class FeatureSubset:
    """Selection mask over d features; bit i of ``value`` is feature i."""

    mask: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "mask", tuple(bool(b) for b in self.mask))

    @classmethod
    def from_value(cls, value: int, d: int) -> FeatureSubset:
        return cls(tuple(bool(value >> i & 1) for i in range(d)))

    @classmethod
    def from_bitstring(cls, bits: str) -> FeatureSubset:
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls(tuple(c == "1" for c in bits))

    @classmethod
    def from_indices(cls, indices, d: int) -> FeatureSubset:
        chosen = set(indices)
        return cls(tuple(i in chosen for i in range(d)))

    def __len__(self):
        return len(self.mask)

    @property
    def value(self) -> int:
        return sum(1 << i for i, b in enumerate(self.mask) if b)

    @property
    def bitstring(self) -> str:
        """Feature 0 first."""
        return "".join("1" if b else "0" for b in self.mask)

    @property
    def indices(self) -> list[int]:
        return [i for i, b in enumerate(self.mask) if b]

    @property
    def size(self) -> int:
        return sum(self.mask)

    @property
    def is_empty(self) -> bool:
        return not any(self.mask)

    @property
    def is_full(self) -> bool:
        return all(self.mask)

    @property
    def is_valid(self) -> bool:
        return not (self.is_empty or self.is_full)

    def names(self, feature_names) -> list[str]:
        return [feature_names[i] for i in self.indices]


@dataclass(frozen=True)
class EnvState:
    index: int
    partial_mask: tuple[bool, ...]

    @property
    def d(self) -> int:
        return len(self.partial_mask)

    @property
    def terminal(self) -> bool:
        return self.index == len(self.partial_mask)

    def subset(self) -> FeatureSubset:
        # undecided positions count as excluded
        return FeatureSubset(self.partial_mask)


@dataclass(frozen=True)
class RewardConfig:
    threshold: float = 0.7
    bonus_factor: float = 2.0
    punishment: float = 0.8
    reward_split: RewardSplit = RewardSplit.TEST
    reward_mode: RewardMode = RewardMode.TERMINAL

    def __post_init__(self):
        object.__setattr__(self, "reward_split", RewardSplit(self.reward_split))
        object.__setattr__(self, "reward_mode", RewardMode(self.reward_mode))
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.punishment < 0:
            raise ValueError("punishment must be >= 0")
        if self.bonus_factor < 1:
            raise ValueError("bonus_factor must be >= 1")


def _check_aligned(subset, train, eval_set):
    if train.d != eval_set.d:
        raise DimensionMismatch(f"train has {train.d} features, eval set {eval_set.d}")
    if len(subset) != train.d:
        raise DimensionMismatch(f"subset covers {len(subset)} features, data has {train.d}")


def fit_and_evaluate(subset: FeatureSubset, train: Dataset, eval_set: Dataset,
                     tree_params: TreeParams) -> ConfusionMatrix:
    """Fit a tree on the subset's columns of ``train`` and score ``eval_set``.

    Shared by the reward and by final policy evaluation.
    """
    _check_aligned(subset, train, eval_set)
    if subset.is_empty:
        raise EmptySubset("no features selected")
    cols = subset.indices
    tree = fit(train.X[:, cols], train.y, tree_params)
    return evaluate(tree, eval_set.X[:, cols], eval_set.y)


def subset_accuracy(subset: FeatureSubset, train: Dataset, eval_set: Dataset,
                    tree_params: TreeParams) -> float:
    _check_aligned(subset, train, eval_set)
    if subset.is_empty:
        # no tree without features: score the majority-class guess
        pos = eval_set.positives
        return max(pos, eval_set.n - pos) / eval_set.n
    return fit_and_evaluate(subset, train, eval_set, tree_params).accuracy


def shape_reward(accuracy: float, subset: FeatureSubset, rc: RewardConfig) -> float:
    """Bonus first, then the punishment for an empty or full subset."""
    reward = accuracy
    if accuracy > rc.threshold:
        reward = reward * rc.bonus_factor
    if not subset.is_valid:
        reward = reward - rc.punishment
    return reward


def compute_reward(subset: FeatureSubset, train: Dataset, eval_set: Dataset,
                   tree_params: TreeParams, rc: RewardConfig) -> float:
    return shape_reward(subset_accuracy(subset, train, eval_set, tree_params), subset, rc)


def reward_sets(split: SplitDataset, reward_split, seed: int = 0) -> tuple[Dataset, Dataset]:
    """(fit set, eval set) used for the in-loop reward.

    ``test`` scores on the held-out test split, which leaks it into the search.
    ``holdout`` carves a seeded, stratified 20% validation slice from train.
    """
    reward_split = RewardSplit(reward_split)
    if reward_split is RewardSplit.TEST:
        return split.train, split.test
    if reward_split is RewardSplit.TRAIN:
        return split.train, split.train
    inner = stratified_split(split.train, 1.0 - HOLDOUT_FRACTION, seed)
    return inner.train, inner.test


class RewardCache:
    """Memo of subset value -> (accuracy, reward); safe for concurrent use."""

    def __init__(self):
        self._data: dict[int, tuple[float, float]] = {}
        self._lock = threading.Lock()
        self.misses = 0

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            if key not in self._data:
                self.misses += 1
            self._data[key] = value

    def __len__(self):
        with self._lock:
            return len(self._data)


class FeatureSelectionEnv:
    """Chain MDP over one (fit set, eval set, tree params, reward config)."""

    def __init__(self, fit_set: Dataset, eval_set: Dataset,
                 tree_params: TreeParams | None = None,
                 reward_config: RewardConfig | None = None,
                 cache: RewardCache | None = None):
        if fit_set.d != eval_set.d:
            raise DimensionMismatch("fit and eval sets have different widths")
        self.fit_set = fit_set
        self.eval_set = eval_set
        self.tree_params = tree_params or TreeParams()
        self.rc = reward_config or RewardConfig()
        self.cache = cache if cache is not None else RewardCache()

    @classmethod
    def from_split(cls, split: SplitDataset, tree_params=None, reward_config=None,
                   seed: int = 0, cache=None) -> FeatureSelectionEnv:
        rc = reward_config or RewardConfig()
        fit_set, eval_set = reward_sets(split, rc.reward_split, seed)
        return cls(fit_set, eval_set, tree_params, rc, cache)

    @property
    def d(self) -> int:
        return self.fit_set.d

    def reset(self) -> EnvState:
        return EnvState(0, (False,) * self.d)

    def step(self, state: EnvState, action) -> tuple[EnvState, bool]:
        if state.terminal:
            raise StepOnTerminal(f"state index {state.index} is terminal")
        action = Action(action)
        mask = list(state.partial_mask)
        mask[state.index] = action is Action.SELECT
        nxt = EnvState(state.index + 1, tuple(mask))
        return nxt, nxt.terminal

    def evaluate_subset(self, subset: FeatureSubset) -> tuple[float, float]:
        """(accuracy, reward), memoized."""
        key = subset.value
        hit = self.cache.get(key)
        if hit is None:
            acc = subset_accuracy(subset, self.fit_set, self.eval_set, self.tree_params)
            hit = (acc, shape_reward(acc, subset, self.rc))
            self.cache.put(key, hit)
        return hit

    def subset_reward(self, subset: FeatureSubset) -> float:
        return self.evaluate_subset(subset)[1]

    def reward(self, next_state: EnvState, done: bool) -> float:
        """Reward for the transition that produced ``next_state``."""
        if self.rc.reward_mode is RewardMode.PER_STEP or done:
            return self.subset_reward(next_state.subset())
        return 0.0


def bounds(rc: RewardConfig) -> tuple[float, float]:
    """Range of a single reward for accuracies in [0, 1]."""
    return -rc.punishment, rc.bonus_factor
