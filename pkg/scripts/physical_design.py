#!/usr/bin/env python3
"""Emit the solid-state design-point and storage-capacity reports."""

import sys
from pathlib import Path

from cavraman.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/design"
    rc = main(["design", "--config", str(ROOT / "configs" / "design_er.json"), "--out", out])
    if rc == 0:
        rc = main(["capacity", "--config", str(ROOT / "configs" / "capacity.json"), "--out", out])
    sys.exit(rc)
