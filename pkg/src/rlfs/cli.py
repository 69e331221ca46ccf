"""Command line entry point: ``rlfs run | oracle | report``.

Settings resolve as built-in defaults < TOML config file < command-line flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .agents import ALGORITHMS
from .dataset import load_csv, stratified_split
from .env import FeatureSelectionEnv, RewardMode, RewardSplit
from .experiment import ExperimentConfig, default_output_dir, reaggregate, run_grid
from .normalize import KINDS, normalize_split
from .oracle import ranking_csv, search_env

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("rlfs")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CELL_FAILED = 2

S = argparse.SUPPRESS


def _csv_list(cast=str):
    def parse(text):
        return [cast(v) for v in text.replace(",", " ").split()]
    return parse


def _add_data_args(p):
    p.add_argument("--config", help="TOML file with settings (flag names, '-' or '_')")
    p.add_argument("--data", dest="data_path", default=S, help="input CSV")
    p.add_argument("--label-column", default=S)
    p.add_argument("--positive-label", default=S)
    p.add_argument("--split-ratio", type=float, default=S)
    p.add_argument("--split-seed", type=int, default=S)


def _add_reward_tree_args(p):
    g = p.add_argument_group("reward")
    g.add_argument("--reward-threshold", type=float, default=S)
    g.add_argument("--bonus-factor", type=float, default=S)
    g.add_argument("--punishment", type=float, default=S)
    g.add_argument("--reward-split", choices=[m.value for m in RewardSplit], default=S,
                   help="data the in-loop accuracy is measured on; 'test' leaks the "
                        "test split into the search")
    g.add_argument("--reward-mode", choices=[m.value for m in RewardMode], default=S)
    g = p.add_argument_group("decision tree")
    g.add_argument("--max-depth", type=int, default=S)
    g.add_argument("--min-samples-split", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlfs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the normalization x algorithm x seed grid")
    _add_data_args(run)
    run.add_argument("--normalizations", type=_csv_list(), default=S,
                     help=f"comma/space separated subset of {','.join(KINDS)}")
    run.add_argument("--algorithms", type=_csv_list(), default=S,
                     help=f"comma/space separated subset of {','.join(ALGORITHMS)}")
    run.add_argument("--algorithm", choices=ALGORITHMS, default=S,
                     help="single algorithm (shorthand for --algorithms)")
    run.add_argument("--seeds", type=_csv_list(int), default=S)
    run.add_argument("--seed", type=int, default=S, help="single seed (shorthand for --seeds)")
    g = run.add_argument_group("agent")
    g.add_argument("--alpha", type=float, default=S)
    g.add_argument("--gamma", type=float, default=S)
    g.add_argument("--episodes", type=int, default=S)
    g.add_argument("--epsilon-start", type=float, default=S)
    g.add_argument("--epsilon-end", type=float, default=S)
    _add_reward_tree_args(run)
    g = run.add_argument_group("output")
    g.add_argument("--output-dir", default=S, help="defaults to $RLFS_OUTPUT_DIR")
    g.add_argument("--window", dest="moving_average_window", type=int, default=S,
                   help="moving-average window for convergence files")
    g.add_argument("--jobs", type=int, default=S)

    orc = sub.add_parser("oracle", help="rank every feature subset by reward (CSV)")
    _add_data_args(orc)
    orc.add_argument("--normalization", choices=KINDS, default="minmax")
    _add_reward_tree_args(orc)
    orc.add_argument("-o", "--output", help="CSV path (default: stdout)")

    rep = sub.add_parser("report", help="re-aggregate existing run directories")
    rep.add_argument("--output-dir", default=S)
    rep.add_argument("--window", dest="moving_average_window", type=int, default=50)
    return parser


def load_config_file(path) -> dict:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = set(ExperimentConfig.field_names())
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        if name == "data":
            name = "data_path"
        if name not in known:
            raise ValueError(f"{path}: unknown setting {key!r}")
        out[name] = value
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    known = {f.name for f in fields(ExperimentConfig)}
    cli = vars(args)
    if "algorithm" in cli:
        values["algorithms"] = [cli["algorithm"]]
    if "seed" in cli:
        values["seeds"] = [cli["seed"]]
    values.update({k: v for k, v in cli.items() if k in known})
    if not values.get("output_dir"):
        values["output_dir"] = default_output_dir()
    return ExperimentConfig(**values)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if not cfg.data_path:
        raise ValueError("--data is required")
    if not cfg.output_dir:
        raise ValueError("--output-dir is required (or set RLFS_OUTPUT_DIR)")
    reports, _ = run_grid(cfg)
    failed = [r for r in reports if not r.ok]
    for r in reports:
        acc = "-" if r.test_accuracy is None else f"{r.test_accuracy:.4f}"
        bits = r.selected.bitstring if r.selected is not None else "-"
        print(f"{r.normalization:7s} {r.algorithm:9s} seed={r.seed:<4d} "
              f"{r.status:12s} acc={acc} subset={bits}")
    print(f"{len(reports)} runs, {len(failed)} failed; summary at "
          f"{Path(cfg.output_dir) / 'summary.csv'}")
    return EXIT_CELL_FAILED if failed else EXIT_OK


def cmd_oracle(args) -> int:
    cfg = resolve_config(args)
    if not cfg.data_path:
        raise ValueError("--data is required")
    ds = load_csv(cfg.data_path, cfg.label_column, cfg.positive_label)
    split = normalize_split(args.normalization,
                            stratified_split(ds, cfg.split_ratio, cfg.split_seed))
    env = FeatureSelectionEnv.from_split(split, cfg.tree_params(), cfg.reward_config(),
                                         seed=cfg.split_seed)
    text = ranking_csv(search_env(env), ds.feature_names)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    out = getattr(args, "output_dir", None) or default_output_dir()
    if not out:
        raise ValueError("--output-dir is required (or set RLFS_OUTPUT_DIR)")
    reports = reaggregate(out, args.moving_average_window)
    failed = sum(not r.ok for r in reports)
    print(f"re-aggregated {len(reports)} runs ({failed} failed) under {out}")
    return EXIT_CELL_FAILED if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "oracle": cmd_oracle, "report": cmd_report}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError) as exc:
        print(f"rlfs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
