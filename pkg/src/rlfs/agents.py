"""Tabular Q-learning and SARSA over the feature-selection chain."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .env import Action, FeatureSelectionEnv, FeatureSubset
from .errors import IndexOutOfRange, MissingNextAction


class Algorithm(str, Enum):
    QLEARNING = "qlearning"
    SARSA = "sarsa"


ALGORITHMS = tuple(a.value for a in Algorithm)


@dataclass(frozen=True)
class AgentConfig:
    algorithm: Algorithm = Algorithm.QLEARNING
    alpha: float = 0.03
    gamma: float = 1.0
    episodes: int = 1000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")


@dataclass(frozen=True)
class EpisodeTrace:
    episode: int
    subset: FeatureSubset
    reward: float
    epsilon: float


def new_qtable(d: int) -> np.ndarray:
    return np.zeros((d, 2), dtype=np.float64)


def epsilon_schedule(cfg: AgentConfig) -> np.ndarray:
    """Exponential decay hitting ``epsilon_end`` on the last episode."""
    n = cfg.episodes
    if n == 0:
        return np.empty(0)
    if n == 1 or cfg.epsilon_start == cfg.epsilon_end:
        return np.full(n, cfg.epsilon_start)
    if cfg.epsilon_start == 0.0:
        return np.zeros(n)
    factor = (cfg.epsilon_end / cfg.epsilon_start) ** (1.0 / (n - 1))
    eps = cfg.epsilon_start * factor ** np.arange(n)
    eps[-1] = cfg.epsilon_end
    return eps


def _check_index(q, s):
    if not 0 <= s < q.shape[0]:
        raise IndexOutOfRange(f"state {s} outside [0, {q.shape[0]})")


def q_learning_update(q, s, a, r, s_next, alpha, gamma):
    """Off-policy TD step on ``q`` in place; ``s_next=None`` means terminal.

    Returns ``q`` for chaining.
    """
    _check_index(q, s)
    if s_next is None:
        best_next = 0.0
    else:
        _check_index(q, s_next)
        best_next = max(q[s_next, 0], q[s_next, 1])
    a = int(a)
    q[s, a] = (1 - alpha) * q[s, a] + alpha * (r + gamma * best_next)
    return q


def sarsa_update(q, s, a, r, s_next, a_next, alpha, gamma):
    """On-policy TD step: bootstraps from the action actually taken next."""
    _check_index(q, s)
    if s_next is None:
        follow = 0.0
    else:
        _check_index(q, s_next)
        if a_next is None:
            raise MissingNextAction("non-terminal SARSA update needs a_next")
        follow = q[s_next, int(a_next)]
    a = int(a)
    q[s, a] = (1 - alpha) * q[s, a] + alpha * (r + gamma * follow)
    return q


def greedy_action(q, s) -> Action:
    # ties go to EXCLUDE
    return Action.SELECT if q[s, 1] > q[s, 0] else Action.EXCLUDE


def select_action(q, s, epsilon, rng: np.random.Generator) -> Action:
    """Epsilon-greedy. Always draws one uniform, plus one more when exploring."""
    if rng.random() < epsilon:
        return Action(int(rng.integers(2)))
    return greedy_action(q, s)


def _run_qlearning_episode(env, q, cfg, eps, rng):
    state = env.reset()
    total = 0.0
    done = False
    while not done:
        a = select_action(q, state.index, eps, rng)
        nxt, done = env.step(state, a)
        r = env.reward(nxt, done)
        total += r
        q_learning_update(q, state.index, a, r, None if done else nxt.index,
                          cfg.alpha, cfg.gamma)
        state = nxt
    return state.subset(), total


def _run_sarsa_episode(env, q, cfg, eps, rng):
    state = env.reset()
    a = select_action(q, state.index, eps, rng)
    total = 0.0
    done = False
    while not done:
        nxt, done = env.step(state, a)
        r = env.reward(nxt, done)
        total += r
        a_next = None if done else select_action(q, nxt.index, eps, rng)
        sarsa_update(q, state.index, a, r, None if done else nxt.index, a_next,
                     cfg.alpha, cfg.gamma)
        state, a = nxt, a_next
    return state.subset(), total


def train(env: FeatureSelectionEnv, cfg: AgentConfig):
    """Run ``cfg.episodes`` episodes; returns (Q table, list of EpisodeTrace).

    The generator seeded from ``cfg.seed`` is used only for action selection,
    so a run is reproducible bit for bit.
    """
    rng = np.random.default_rng(cfg.seed)
    q = new_qtable(env.d)
    run_episode = (_run_qlearning_episode if cfg.algorithm is Algorithm.QLEARNING
                   else _run_sarsa_episode)
    traces = []
    for ep, eps in enumerate(epsilon_schedule(cfg), start=1):
        subset, total = run_episode(env, q, cfg, float(eps), rng)
        traces.append(EpisodeTrace(ep, subset, total, float(eps)))
    return q, traces
