#!/usr/bin/env python3
"""Run the (N, rho) memory grid with the shipped config.

Extra CLI flags pass through, e.g. --out DIR or --seed S.
"""
import sys
from pathlib import Path

from esn_rmt.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "memory_grid.yaml"

if __name__ == "__main__":
    sys.exit(main(["experiment", "memory-grid", "--config", str(CONFIG), *sys.argv[1:]]))
