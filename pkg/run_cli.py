#!/usr/bin/env python3
"""Thin wrapper. Use `uv run arterial-cli` or `uv run run_cli.py`."""
import sys

from arterial_network.cli_main import main

if __name__ == "__main__":
    sys.exit(main())
