"""Wrapper feature selection with tabular Q-learning and SARSA agents."""

__version__ = "0.1.0"

from .agents import AgentConfig, Algorithm, q_learning_update, sarsa_update, train  # noqa: E402
from .dataset import Dataset, SplitDataset, load_csv, stratified_split  # noqa: E402
from .env import (  # noqa: E402
    Action,
    FeatureSelectionEnv,
    FeatureSubset,
    RewardConfig,
    compute_reward,
)
from .oracle import exhaustive_search, percentile_of  # noqa: E402
from .policy import RunReport, evaluate_policy, extract_policy  # noqa: E402
from .tree import DecisionTree, TreeParams  # noqa: E402

__all__ = [
    "Action", "AgentConfig", "Algorithm", "Dataset", "DecisionTree",
    "FeatureSelectionEnv", "FeatureSubset", "RewardConfig", "RunReport",
    "SplitDataset", "TreeParams", "compute_reward", "evaluate_policy",
    "exhaustive_search", "extract_policy", "load_csv", "percentile_of",
    "q_learning_update", "sarsa_update", "stratified_split", "train",
]
