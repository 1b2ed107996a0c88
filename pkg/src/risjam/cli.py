"""Command line entry point for the jamming sweep."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import ConfigError, load_config, rows_to_csv, run_sweep, summarize


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo sweep of a RIS-assisted link under reactive jamming.",
    )
    parser.add_argument("--config", required=True, help="INI experiment description")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--trials", type=int, default=None, help="override trial count")
    parser.add_argument("--jobs", type=int, default=None, help="worker process count")
    parser.add_argument(
        "--summary", action="store_true",
        help="print crossover JSR and peak gain per curve to stdout",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
        if args.jobs is not None:
            cfg = replace(cfg, jobs=args.jobs)
    except (ConfigError, ValueError) as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return 1

    try:
        rows = run_sweep(cfg)
        with open(args.out, "w") as fh:
            fh.write(rows_to_csv(rows))
        if args.summary:
            sys.stdout.write(summarize(rows))
    except Exception as exc:  # noqa: BLE001 - surface as a runtime failure
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
