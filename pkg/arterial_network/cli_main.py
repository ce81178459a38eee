#!/usr/bin/env python3
"""Entry point for the arterial network CLI."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from rich.logging import RichHandler

try:
    from dotenv import load_dotenv

    env_path = Path.cwd() / ".env"
    if env_path.exists():
        load_dotenv(env_path)
except ImportError:
    pass

from .cli import CLI, EXIT_USAGE
from .config import load_config
from .errors import ConfigError, UsageError
from .run_config import load_run_config

COMMANDS = ("check", "run", "converge", "stability", "compare-windkessel")


def _levels(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arterial-cli", description="Characteristic scheme for arterial networks")
    parser.add_argument("--log-level", help="Logging level (default from ARTERIAL_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="Run document (YAML)")
        p.add_argument("--out", help="Output directory")
        step = p.add_mutually_exclusive_group()
        step.add_argument("--sigma", type=float, help="k/h ratio")
        step.add_argument("--dt", type=float, help="Time step k")
        p.add_argument("--horizon", type=float, help="Final time T")
        p.add_argument("--levels", type=_levels, help="Comma-separated cell counts, each double the previous")
        p.add_argument("--stride", type=int, help="Write probes every s-th step")
        p.add_argument("--probe", action="append", help="BRANCH:X (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0

    cfg = load_config(log_level=args.log_level)
    logging.basicConfig(
        level=cfg.log_level,
        format="%(message)s",
        handlers=[RichHandler(show_path=False, rich_tracebacks=True)],
    )

    cli = CLI(cfg)
    try:
        rc = load_run_config(args.config).with_overrides(
            sigma=args.sigma,
            dt=args.dt,
            horizon=args.horizon,
            stride=args.stride,
            probes=args.probe,
            out=args.out,
            levels=args.levels,
        )
        handler = getattr(cli, "cmd_" + args.command.replace("-", "_"))
        return handler(rc)
    except (ConfigError, UsageError) as exc:
        cli.console.print(f"[error]error:[/error] {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
