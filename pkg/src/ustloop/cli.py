"""Command line entry point.

    ustloop <experiment> --config FILE [--seed N] [--workers K] [--out DIR]
    ustloop validate-config FILE
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import EXPERIMENTS, load_config
from .errors import ConfigInvalid
from .harness import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ustloop", description="UST loop and exploration experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (falls back to $USTLOOP_WORKERS, then the config)")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        p.add_argument("-q", "--quiet", action="store_true")
    v = sub.add_parser("validate-config", help="check a config file against the schema")
    v.add_argument("file")
    return parser


def _workers(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("USTLOOP_WORKERS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigInvalid(f"USTLOOP_WORKERS must be an integer, got {env!r}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate-config":
        try:
            cfg = load_config(args.file)
        except ConfigInvalid as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"ok: {cfg.experiment}")
        return 0

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        workers = _workers(args.workers)
        # the subcommand names the experiment; it overrides the config's own field
        cfg = load_config(args.config, experiment=args.command, master_seed=args.seed,
                          workers=workers, output_dir=args.out)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
