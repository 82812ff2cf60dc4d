"""Command line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .experiments import EXPERIMENTS, SCHEMAS, ConfigError, ExperimentConfig, run_experiment


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carleson-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        keys = ", ".join(SCHEMAS[name])
        p = sub.add_parser(name, help=f"run {name}", description=f"Parameters: {keys}")
        p.add_argument("--config", type=Path, help="TOML config with optional experiment, seed and [params]")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
        p.add_argument("--seed", type=_u64, help="u64 seed; overrides the config")
        p.add_argument("--threads", type=_positive, default=1, help="worker threads (default: 1)")
        p.add_argument("-q", "--quiet", action="store_true", help="print only the final verdict")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stdout, force=True)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = ExperimentConfig.from_toml(text, args.experiment, seed=args.seed, out=args.out,
                                         threads=args.threads)
        report = run_experiment(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {args.experiment} ({report.wall_clock:.1f}s) -> {args.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
