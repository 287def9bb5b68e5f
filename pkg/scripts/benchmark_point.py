#!/usr/bin/env python3
"""Run the benchmark operating point and print its figures of merit."""

import sys
from pathlib import Path

from cavraman.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/benchmark"
    sys.exit(main(["run", "--config", str(ROOT / "configs" / "fig2_point.json"), "--out", out]))
