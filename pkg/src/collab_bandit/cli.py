"""Command-line entry point: ``collab-bandit-sim run --config <path>``."""

from __future__ import annotations

import argparse
import sys

from .harness import KINDS, ConfigError, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collab-bandit-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a YAML config")
    run.add_argument("--config", required=True, help="path to the YAML config")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--threads", type=int, help="worker threads (output does not depend on this)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--experiment", choices=KINDS, help="override the experiment kind")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config,
            master_seed=args.seed,
            trials=args.trials,
            threads=args.threads,
            out=args.out,
            experiment=args.experiment,
        )
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    print((result.out_dir / "summary.txt").read_text(encoding="utf-8"), end="")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
