"""Grid runner: normalizations x algorithms x seeds, plus plot-ready outputs.

Layout under ``output_dir``::

    <norm>/<algorithm>/<seed>/trace.csv
    <norm>/<algorithm>/<seed>/report.json
    <norm>/<algorithm>/<seed>/convergence.csv
    summary.csv
    plots/confusion.csv
    plots/confusion_cells.csv
    plots/accuracy_summary.csv
    run_metadata.json          (only file carrying timestamps)
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .agents import ALGORITHMS, AgentConfig, EpisodeTrace, train
from .dataset import BCCDS_LABEL, BCCDS_POSITIVE, SplitDataset, load_csv, stratified_split
from .env import FeatureSelectionEnv, RewardConfig
from .normalize import KINDS, normalize_split
from .policy import (
    STATUS_EMPTY_POLICY,
    STATUS_ERROR,
    RunReport,
    evaluate_policy,
    extract_policy,
)
from .tree import TreeParams

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["algorithm", "normalization", "seed", "status", "accuracy",
                   "tp", "fp", "tn", "fn", "subset", "selected_names",
                   "greedy_reward", "error"]
TRACE_COLUMNS = ["episode", "reward", "epsilon", "subset_bitstring"]


@dataclass
class ExperimentConfig:
    data_path: str = ""
    label_column: str = BCCDS_LABEL
    positive_label: str = BCCDS_POSITIVE
    split_ratio: float = 0.9
    split_seed: int = 0
    normalizations: list[str] = field(default_factory=lambda: list(KINDS))
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    seeds: list[int] = field(default_factory=lambda: [0])
    # agent
    alpha: float = 0.03
    gamma: float = 1.0
    episodes: int = 1000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    # reward
    reward_threshold: float = 0.7
    bonus_factor: float = 2.0
    punishment: float = 0.8
    reward_split: str = "test"
    reward_mode: str = "terminal"
    # tree
    max_depth: int | None = None
    min_samples_split: int = 2
    # output
    output_dir: str = ""
    moving_average_window: int = 50
    jobs: int = 1

    def validate(self):
        if not self.normalizations or not self.algorithms or not self.seeds:
            raise ValueError("normalizations, algorithms and seeds must be non-empty")
        bad = set(self.normalizations) - set(KINDS)
        if bad:
            raise ValueError(f"unknown normalization(s): {sorted(bad)}")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithm(s): {sorted(bad)}")
        if not self.output_dir:
            raise ValueError("output_dir is not set")
        # constructing these runs their own range checks
        self.reward_config()
        self.tree_params()
        self.agent_config(self.algorithms[0], self.seeds[0])

    def reward_config(self) -> RewardConfig:
        return RewardConfig(self.reward_threshold, self.bonus_factor, self.punishment,
                            self.reward_split, self.reward_mode)

    def tree_params(self) -> TreeParams:
        return TreeParams(self.max_depth, self.min_samples_split)

    def agent_config(self, algorithm, seed) -> AgentConfig:
        return AgentConfig(algorithm, self.alpha, self.gamma, self.episodes,
                           self.epsilon_start, self.epsilon_end, seed)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def run_dir(output_dir, normalization, algorithm, seed) -> Path:
    return Path(output_dir) / normalization / algorithm / str(seed)


def write_trace(path, traces):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in traces:
            w.writerow([t.episode, repr(t.reward), repr(t.epsilon), t.subset.bitstring])


def read_trace_rewards(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([float(row["reward"]) for row in csv.DictReader(fh)])


def run_cell(cfg: ExperimentConfig, split: SplitDataset, normalization: str,
             algorithm: str, seed: int):
    """Train one agent and evaluate its greedy subset. Never raises."""
    report = RunReport(algorithm, normalization, seed)
    traces: list[EpisodeTrace] = []
    out = run_dir(cfg.output_dir, normalization, algorithm, seed)
    try:
        data = normalize_split(normalization, split)
        env = FeatureSelectionEnv.from_split(data, cfg.tree_params(), cfg.reward_config(),
                                             seed=cfg.split_seed)
        q, traces = train(env, cfg.agent_config(algorithm, seed))
        subset = extract_policy(q)
        report.selected = subset
        report.selected_names = subset.names(data.train.feature_names)
        report.greedy_reward = env.subset_reward(subset)
        if subset.is_empty:
            report.status = STATUS_EMPTY_POLICY
            report.error = "greedy policy selects no features"
        else:
            result = evaluate_policy(subset, data.train, data.test, cfg.tree_params())
            report.test_accuracy = result.accuracy
            report.confusion = result.confusion
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "trace.csv"
        write_trace(trace_path, traces)
        report.trace_path = str(trace_path.relative_to(cfg.output_dir))
    except Exception as exc:  # one bad cell must not sink the grid
        log.exception("run %s/%s/%s failed", normalization, algorithm, seed)
        report.status = STATUS_ERROR
        report.error = f"{type(exc).__name__}: {exc}"
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json())
    except OSError as exc:
        report.status = STATUS_ERROR
        report.error = f"{type(exc).__name__}: {exc}"
    return report, traces


def _cell_job(args):
    return run_cell(*args)


def grid(cfg: ExperimentConfig):
    for norm in cfg.normalizations:
        for algo in cfg.algorithms:
            for seed in cfg.seeds:
                yield norm, algo, seed


def run_grid(cfg: ExperimentConfig):
    """Run every cell, write per-run files, then the summary and plot data.

    Returns (reports, traces) in grid order; traces is keyed by
    (normalization, algorithm, seed).
    """
    cfg.validate()
    started = time.time()
    ds = load_csv(cfg.data_path, cfg.label_column, cfg.positive_label)
    split = stratified_split(ds, cfg.split_ratio, cfg.split_seed)
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)

    jobs = [(cfg, split, n, a, s) for n, a, s in grid(cfg)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]

    reports = [r for r, _ in results]
    traces = {(r.normalization, r.algorithm, r.seed): t for r, t in results}
    emit_plot_data(reports, traces, cfg.output_dir, cfg.moving_average_window)
    write_summary(Path(cfg.output_dir) / "summary.csv", reports)
    write_metadata(cfg, started, reports)
    return reports, traces


def write_summary(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in reports:
            cm = r.confusion.as_dict() if r.confusion is not None else {}
            w.writerow([
                r.algorithm, r.normalization, r.seed, r.status,
                "" if r.test_accuracy is None else repr(r.test_accuracy),
                cm.get("tp", ""), cm.get("fp", ""), cm.get("tn", ""), cm.get("fn", ""),
                r.selected.bitstring if r.selected is not None else "",
                ";".join(r.selected_names),
                "" if r.greedy_reward is None else repr(r.greedy_reward),
                r.error,
            ])


def write_metadata(cfg, started, reports):
    meta = {
        "rlfs_version": __version__,
        "started_unix": started,
        "finished_unix": time.time(),
        "config": asdict(cfg),
        "cells": len(reports),
        "failed": sum(not r.ok for r in reports),
    }
    path = Path(cfg.output_dir) / "run_metadata.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def moving_average(values, window: int) -> list[float | None]:
    """Trailing mean; entries before the window fills are None."""
    values = np.asarray(values, dtype=np.float64)
    out: list[float | None] = [None] * values.size
    if window < 1 or window > values.size:
        return out
    csum = np.concatenate([[0.0], np.cumsum(values)])
    means = (csum[window:] - csum[:-window]) / window
    out[window - 1:] = means.tolist()
    return out


def write_convergence(path, rewards, window):
    avg = moving_average(rewards, window)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "reward", f"moving_avg_{window}"])
        for i, (r, m) in enumerate(zip(rewards, avg), start=1):
            w.writerow([i, repr(float(r)), "" if m is None else repr(m)])


def _cells(reports):
    cells: dict[tuple[str, str], list[RunReport]] = {}
    for r in reports:
        cells.setdefault((r.algorithm, r.normalization), []).append(r)
    return cells


def emit_plot_data(reports, traces, output_dir, window: int = 50):
    """Convergence curves per run, confusion tables and an accuracy summary.

    ``traces`` maps (normalization, algorithm, seed) to either a list of
    EpisodeTrace or an array of episode rewards.
    """
    if not reports:
        raise ValueError("no reports to summarize")
    output_dir = Path(output_dir)
    plots = output_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)

    for key, tr in traces.items():
        if tr is None or len(tr) == 0:
            continue
        rewards = [t.reward for t in tr] if isinstance(tr[0], EpisodeTrace) else list(tr)
        if window > len(rewards):
            warnings.warn(f"moving-average window {window} exceeds {len(rewards)} "
                          f"episodes for run {key}; column left empty", stacklevel=2)
        out = run_dir(output_dir, *key)
        out.mkdir(parents=True, exist_ok=True)
        write_convergence(out / "convergence.csv", rewards, window)

    with open(plots / "confusion.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "normalization", "seed", "status", "tp", "fp", "tn", "fn"])
        for r in reports:
            cm = r.confusion.as_dict() if r.confusion is not None else {}
            w.writerow([r.algorithm, r.normalization, r.seed, r.status,
                        cm.get("tp", ""), cm.get("fp", ""), cm.get("tn", ""), cm.get("fn", "")])

    cells = _cells(reports)
    with open(plots / "confusion_cells.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "normalization", "runs", "tp", "fp", "tn", "fn", "fn_zero_runs"])
        for (algo, norm), rs in cells.items():
            good = [r.confusion for r in rs if r.confusion is not None]
            w.writerow([algo, norm, len(good),
                        sum(c.tp for c in good), sum(c.fp for c in good),
                        sum(c.tn for c in good), sum(c.fn for c in good),
                        sum(c.fn == 0 for c in good)])

    with open(plots / "accuracy_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "normalization", "runs", "failed", "mean_accuracy",
                    "std_accuracy", "min_accuracy", "max_accuracy", "best_seed",
                    "fn_zero_runs"])
        for (algo, norm), rs in cells.items():
            good = [r for r in rs if r.test_accuracy is not None]
            accs = np.array([r.test_accuracy for r in good])
            if good:
                best = max(good, key=lambda r: (r.test_accuracy, -r.seed))
                stats = [repr(float(accs.mean())), repr(float(accs.std())),
                         repr(float(accs.min())), repr(float(accs.max())), best.seed]
            else:
                stats = ["", "", "", "", ""]
            w.writerow([algo, norm, len(good), len(rs) - len(good), *stats,
                        sum(r.confusion.fn == 0 for r in good)])


def collect_reports(output_dir):
    """Reload every report.json under ``output_dir`` in a stable order."""
    output_dir = Path(output_dir)
    found = []
    for path in output_dir.glob("*/*/*/report.json"):
        found.append(RunReport.from_dict(json.loads(path.read_text())))
    norms, algos, seeds = list(KINDS), list(ALGORITHMS), []
    meta = output_dir / "run_metadata.json"
    if meta.exists():
        # reuse the grid order of the original run
        conf = json.loads(meta.read_text()).get("config", {})
        norms = conf.get("normalizations", norms)
        algos = conf.get("algorithms", algos)
        seeds = conf.get("seeds", seeds)

    def rank(seq, value):
        return seq.index(value) if value in seq else len(seq)

    found.sort(key=lambda r: (rank(norms, r.normalization), r.normalization,
                              rank(algos, r.algorithm), r.algorithm,
                              rank(seeds, r.seed), r.seed))
    return found


def reaggregate(output_dir, window: int = 50):
    """Rebuild summary.csv and plot data from existing run directories."""
    reports = collect_reports(output_dir)
    if not reports:
        raise FileNotFoundError(f"no report.json files under {output_dir}")
    traces = {}
    for r in reports:
        if r.trace_path:
            path = Path(output_dir) / r.trace_path
            if path.exists():
                traces[(r.normalization, r.algorithm, r.seed)] = read_trace_rewards(path)
    emit_plot_data(reports, traces, output_dir, window)
    write_summary(Path(output_dir) / "summary.csv", reports)
    return reports


def default_output_dir() -> str:
    return os.environ.get("RLFS_OUTPUT_DIR", "")
