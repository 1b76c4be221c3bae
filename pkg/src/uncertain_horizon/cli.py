"""Command-line entry point: ``uncertain-horizon run`` and ``uncertain-horizon compare``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .harness import ConfigError, ExperimentConfig, compare, run_experiment


def _load(path: str, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    updates = {k: v for k, v in overrides.items() if v is not None}
    if updates:
        try:
            cfg = ExperimentConfig.model_validate({**cfg.model_dump(), **updates})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncertain-horizon",
        description="Regret experiments for episodic RL with random episode lengths.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True, help="experiment JSON file")
    run.add_argument("--out", help="output directory (default: config 'output' or .)")
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--seed", type=int, help="override the base seed")

    cmp_ = sub.add_parser("compare", help="run several configs and align their regret curves")
    cmp_.add_argument("--configs", required=True, help="comma-separated experiment JSON files")
    cmp_.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = _load(args.config, trials=args.trials, seed=args.seed)
            summary = run_experiment(cfg, args.out)
            if len(summary):
                print(f"final mean cumulative regret {summary[-1, 1]:.4f} +/- {summary[-1, 2]:.4f} "
                      f"over {cfg.trials} trial(s)")
            else:
                print("no episodes run")
        else:
            cfgs = [_load(p.strip()) for p in args.configs.split(",") if p.strip()]
            path = compare(cfgs, args.out)
            print(f"wrote {path}")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
