"""Command-line entry: plots --csv PATH --kind fig2|fig3 --out PATH."""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Regenerate efficiency figures from sweep CSV files."
    )
    parser.add_argument("--csv", required=True, help="sweep CSV produced by the simulator")
    parser.add_argument("--kind", required=True, choices=["fig2", "fig3"])
    parser.add_argument("--out", required=True, help="output image path (png)")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(csv_path=args.csv, kind=args.kind, out_path=args.out)
        render(spec)
    except RenderError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
