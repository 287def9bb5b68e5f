"""Turn sweep CSV files into the two standard efficiency figures.

Figure kinds mirror the simulator's sweep layouts: `fig2` expects a grid over
pulse duration and mode detuning and emits one panel per independent variable
(efficiency vs pulse FWHM, efficiency vs detuning), with one curve per value
of the other axis; `fig3` expects a grid over cavity decay rate and pulse
duration and emits efficiency vs kappa*delta with one curve per duration.

Values are plotted exactly as tabulated (no smoothing, no rescaling): the
rendered curves are regression artifacts for the CSV contents.  Styling is
fixed and the PNG writer embeds no timestamps, so re-rendering the same CSV
reproduces identical bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

__all__ = ["FigureSpec", "RenderError", "render", "load_sweep"]

_KINDS = {
    "fig2": (("pulse_fwhm_over_delta", "delta_mn_delta"), ("delta_mn_delta", "pulse_fwhm_over_delta")),
    "fig3": (("kappa_delta", "pulse_fwhm_over_delta"),),
}

_AXIS_LABELS = {
    "kappa_delta": r"$\kappa\,\delta$",
    "pulse_fwhm_over_delta": r"$\delta_p/\delta$",
    "delta_mn_delta": r"$\delta_{mn}\,\delta$",
}

_STYLES = ["k-o", "r--s", "b:^", "g-.v", "m-d", "c--*"]


class RenderError(RuntimeError):
    """Raised when the CSV cannot back the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    out_path: str
    ylim: tuple[float, float] | None = (0.0, 1.05)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise RenderError(f"unknown figure kind '{self.kind}' (expected one of {sorted(_KINDS)})")


def load_sweep(path: str) -> tuple[list[str], list[dict]]:
    """Read a sweep CSV; rows with a recorded error or non-finite eta are dropped."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise RenderError(f"{path}: empty CSV")
            columns = list(reader.fieldnames)
            rows = []
            for raw in reader:
                if raw.get("error"):
                    continue
                row = {}
                for key, val in raw.items():
                    if key == "error":
                        continue
                    try:
                        row[key] = float(val)
                    except (TypeError, ValueError):
                        raise RenderError(f"{path}: non-numeric value '{val}' in column '{key}'")
                if math.isfinite(row.get("eta", math.nan)):
                    rows.append(row)
    except OSError as e:
        raise RenderError(f"cannot read {path}: {e}")
    if not rows:
        raise RenderError(f"{path}: no usable rows")
    return columns, rows


def _curves(rows: list[dict], x_col: str, family_col: str):
    """Group rows into one (x, eta) curve per family value, sorted."""
    families = sorted({r[family_col] for r in rows})
    out = []
    for fam in families:
        pts = sorted((r[x_col], r["eta"]) for r in rows if r[family_col] == fam)
        out.append((fam, [p[0] for p in pts], [p[1] for p in pts]))
    return out


def render(spec: FigureSpec) -> dict:
    """Write the figure and return the plotted curves for downstream checks."""
    columns, rows = load_sweep(spec.csv_path)
    panels = _KINDS[spec.kind]
    needed = {c for panel in panels for c in panel} | {"eta"}
    missing = sorted(needed - set(columns))
    if missing:
        raise RenderError(f"{spec.csv_path}: missing columns {missing}")

    fig, axes = plt.subplots(
        1, len(panels), figsize=(5.2 * len(panels), 3.8), dpi=130, squeeze=False
    )
    plotted = {}
    for ax, (x_col, family_col) in zip(axes[0], panels):
        curves = _curves(rows, x_col, family_col)
        for style, (fam, xs, ys) in zip(_STYLES * 4, curves):
            ax.plot(xs, ys, style, markersize=4, linewidth=1.2,
                    label=f"{_AXIS_LABELS[family_col]} = {fam:g}")
        ax.set_xlabel(_AXIS_LABELS[x_col])
        ax.set_ylabel(r"$\eta$")
        if spec.ylim is not None:
            ax.set_ylim(*spec.ylim)
        ax.legend(fontsize=7, frameon=False)
        plotted[x_col] = curves
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return plotted
