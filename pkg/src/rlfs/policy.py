"""Greedy policy extraction and end-to-end evaluation of a selected subset."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import Dataset
from .env import Action, FeatureSelectionEnv, FeatureSubset, fit_and_evaluate
from .errors import EmptySubset
from .tree import ConfusionMatrix, TreeParams

STATUS_OK = "ok"
STATUS_EMPTY_POLICY = "empty_policy"
STATUS_ERROR = "error"


def extract_policy(q) -> FeatureSubset:
    """Per-state argmax; a tie excludes the feature."""
    q = np.asarray(q, dtype=np.float64)
    if not np.all(np.isfinite(q)):
        raise ValueError("Q table has non-finite entries")
    return FeatureSubset(tuple(q[:, 1] > q[:, 0]))


def greedy_rollout(env: FeatureSelectionEnv, q) -> FeatureSubset:
    """Walk the chain taking greedy actions; same answer as extract_policy."""
    state = env.reset()
    done = False
    while not done:
        a = Action.SELECT if q[state.index, 1] > q[state.index, 0] else Action.EXCLUDE
        state, done = env.step(state, a)
    return state.subset()


@dataclass(frozen=True)
class PolicyEvaluation:
    accuracy: float
    confusion: ConfusionMatrix


def evaluate_policy(subset: FeatureSubset, train: Dataset, test: Dataset,
                    tree_params: TreeParams | None = None) -> PolicyEvaluation:
    if subset.is_empty:
        raise EmptySubset("the extracted policy selects no features")
    cm = fit_and_evaluate(subset, train, test, tree_params or TreeParams())
    return PolicyEvaluation(cm.accuracy, cm)


@dataclass
class RunReport:
    algorithm: str
    normalization: str
    seed: int
    status: str = STATUS_OK
    selected: FeatureSubset | None = None
    selected_names: list[str] = field(default_factory=list)
    test_accuracy: float | None = None
    confusion: ConfusionMatrix | None = None
    greedy_reward: float | None = None
    trace_path: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "normalization": self.normalization,
            "seed": self.seed,
            "status": self.status,
            "selected": self.selected.bitstring if self.selected is not None else None,
            "selected_names": list(self.selected_names),
            "test_accuracy": self.test_accuracy,
            "confusion": asdict(self.confusion) if self.confusion is not None else None,
            "greedy_reward": self.greedy_reward,
            "trace_path": self.trace_path,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data) -> RunReport:
        sel = data.get("selected")
        cm = data.get("confusion")
        return cls(
            algorithm=data["algorithm"],
            normalization=data["normalization"],
            seed=int(data["seed"]),
            status=data.get("status", STATUS_OK),
            selected=FeatureSubset.from_bitstring(sel) if sel is not None else None,
            selected_names=list(data.get("selected_names", [])),
            test_accuracy=data.get("test_accuracy"),
            confusion=ConfusionMatrix(**cm) if cm is not None else None,
            greedy_reward=data.get("greedy_reward"),
            trace_path=data.get("trace_path", ""),
            error=data.get("error", ""),
        )
