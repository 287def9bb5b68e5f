#!/usr/bin/env python3
"""Reproduce both efficiency figures: sweep grids, then render PNGs.

Usage: python scripts/sweep_figures.py [--workers N]
Writes out/fig2/sweep.csv, out/fig3/sweep.csv and, when the companion
figure package (frontend/) is installed, out/fig2.png and out/fig3.png.
"""

import argparse
import sys
from pathlib import Path

from cavraman.cli import main as cav

ROOT = Path(__file__).resolve().parent.parent


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()

    for kind in ("fig2", "fig3"):
        rc = cav([
            "sweep",
            "--config", str(ROOT / "configs" / f"{kind}_sweep.json"),
            "--out", f"{args.out}/{kind}",
            "--workers", str(args.workers),
        ])
        if rc != 0:
            return rc
    try:
        from memfig.cli import main as plots
    except ImportError:
        print("memfig not installed; skipping figure rendering (pip install -e frontend/)")
        return 0
    for kind in ("fig2", "fig3"):
        rc = plots([
            "--csv", f"{args.out}/{kind}/sweep.csv", "--kind", kind,
            "--out", f"{args.out}/{kind}.png",
        ])
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(run())
