"""Batch front end: single runs, figure-style sweeps, design and capacity reports.

All simulation configs are dimensionless in units of the switching time
(kappa delta, Gamma delta, T/delta, ...); physical units appear only in the
design and capacity commands.  Outputs are flat files: a per-run
timeseries.csv and summary.json, or a sweep.csv with one row per grid point.
Numbers are written in scientific notation with 12 significant digits so
repeated runs diff clean.

Exit codes: 0 success, 1 config error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import CapacityInput, DesignPoint, capacity_estimate, design_point
from .dynamics import SystemConfig
from .hg_modes import ModeIndex, QuadratureError
from .protocol import PulseSpec, run_protocol

__all__ = ["main", "ConfigError", "parse_run_config", "cmd_run", "cmd_sweep", "cmd_design", "cmd_capacity"]

_FMT = "{:.11e}"


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field path."""

    def __init__(self, fieldpath: str, message: str):
        super().__init__(f"config field '{fieldpath}': {message}")
        self.fieldpath = fieldpath


def _need(d: dict, key: str, typ, fieldpath: str):
    if key not in d:
        raise ConfigError(fieldpath, "missing required field")
    val = d[key]
    if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if not isinstance(val, typ):
        raise ConfigError(fieldpath, f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _opt(d: dict, key: str, default, fieldpath: str, positive=False, nonneg=False):
    val = d.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(fieldpath, "expected a number")
    val = float(val)
    if positive and val <= 0:
        raise ConfigError(fieldpath, "must be positive")
    if nonneg and val < 0:
        raise ConfigError(fieldpath, "must be non-negative")
    return val


_RUN_DEFAULTS = {
    "modes": [[0, 0]],
    "kappa_delta": 4.2,
    "Gamma_delta": 4.2,
    "gammaR_delta": 0.0,
    "delta_mn_delta": 0.0,
    "T_over_delta": 30.0,
    "theta0_deg": 90.0,
    "Lz_over_L": 1.0,
    "pi_w0_over_Lz": 0.02,
    "Lz_over_zR": 0.1,
    "model": "simplified",
    "retrieval": "backward",
    "dt_over_delta": 0.005,
    "p_pad": 8,
    "pulse": {"fwhm_over_delta": 1.0, "center_over_delta": None, "amplitudes": None},
}


def normalize_run_config(raw: dict) -> dict:
    """Fill defaults and validate; returns the canonical config dict echoed in outputs."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(raw) - set(_RUN_DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    cfg = copy.deepcopy(_RUN_DEFAULTS)
    for k, v in raw.items():
        if k == "pulse":
            if not isinstance(v, dict):
                raise ConfigError("pulse", "expected an object")
            bad = set(v) - set(cfg["pulse"])
            if bad:
                raise ConfigError(f"pulse.{sorted(bad)[0]}", "unknown field")
            cfg["pulse"].update(v)
        else:
            cfg[k] = v

    modes = cfg["modes"]
    if not isinstance(modes, list) or not modes:
        raise ConfigError("modes", "expected a non-empty list of [m, n] pairs")
    for i, mn in enumerate(modes):
        if (not isinstance(mn, list)) or len(mn) != 2 or not all(isinstance(v, int) and v >= 0 for v in mn):
            raise ConfigError(f"modes[{i}]", "expected a pair of non-negative integers")
    K = len(modes)

    for key in ("kappa_delta", "delta_mn_delta"):
        val = cfg[key]
        if isinstance(val, list):
            if len(val) != K:
                raise ConfigError(key, f"per-mode list must have {K} entries")
            for i, v in enumerate(val):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{key}[{i}]", "expected a number")
                if key == "kappa_delta" and v <= 0:
                    raise ConfigError(f"{key}[{i}]", "must be positive")
        else:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(key, "expected a number or per-mode list")
            if key == "kappa_delta" and val <= 0:
                raise ConfigError(key, "must be positive")

    _opt(cfg, "Gamma_delta", None, "Gamma_delta", nonneg=True)
    _opt(cfg, "gammaR_delta", None, "gammaR_delta", nonneg=True)
    _opt(cfg, "T_over_delta", None, "T_over_delta", positive=True)
    theta = _opt(cfg, "theta0_deg", None, "theta0_deg")
    if not 0 < theta < 180:
        raise ConfigError("theta0_deg", "must lie strictly between 0 and 180")
    lol = _opt(cfg, "Lz_over_L", None, "Lz_over_L", positive=True)
    if lol > 1:
        raise ConfigError("Lz_over_L", "must not exceed 1")
    _opt(cfg, "pi_w0_over_Lz", None, "pi_w0_over_Lz", positive=True)
    lzr = _opt(cfg, "Lz_over_zR", None, "Lz_over_zR", positive=True)
    if lzr >= 2:
        raise ConfigError("Lz_over_zR", "must be below 2 (sample inside the confocal range)")
    if cfg["model"] not in ("simplified", "full"):
        raise ConfigError("model", "must be 'simplified' or 'full'")
    if cfg["retrieval"] not in ("backward", "forward"):
        raise ConfigError("retrieval", "must be 'backward' or 'forward'")
    _opt(cfg, "dt_over_delta", None, "dt_over_delta", positive=True)
    if not isinstance(cfg["p_pad"], int) or cfg["p_pad"] < 0:
        raise ConfigError("p_pad", "expected a non-negative integer")

    pulse = cfg["pulse"]
    _opt(pulse, "fwhm_over_delta", None, "pulse.fwhm_over_delta", positive=True)
    if pulse["center_over_delta"] is None:
        pulse["center_over_delta"] = -cfg["T_over_delta"] / 2.0
    else:
        _opt(pulse, "center_over_delta", None, "pulse.center_over_delta")
    if pulse["amplitudes"] is None:
        amp = [[0.0, 0.0] for _ in range(K)]
        amp[0] = [1.0, 0.0]
        pulse["amplitudes"] = amp
    amps = pulse["amplitudes"]
    if not isinstance(amps, list) or len(amps) != K:
        raise ConfigError("pulse.amplitudes", f"expected {K} [re, im] pairs (one per mode)")
    norm = 0.0
    for i, a in enumerate(amps):
        if not isinstance(a, list) or len(a) != 2 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in a
        ):
            raise ConfigError(f"pulse.amplitudes[{i}]", "expected an [re, im] pair")
        norm += a[0] ** 2 + a[1] ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError("pulse.amplitudes", f"weights must satisfy sum |A|^2 = 1, got {norm:.6g}")
    return cfg


def parse_run_config(raw: dict):
    """Build (PulseSpec, SystemConfig, direction, dt) from a config dict."""
    cfg = normalize_run_config(raw)
    modes = [ModeIndex(*mn) for mn in cfg["modes"]]
    sys_cfg = SystemConfig.dimensionless(
        modes=modes,
        kappa_delta=cfg["kappa_delta"],
        Gamma_delta=cfg["Gamma_delta"],
        gammaR_delta=cfg["gammaR_delta"],
        delta_mn_delta=cfg["delta_mn_delta"],
        T_over_delta=cfg["T_over_delta"],
        theta0_deg=cfg["theta0_deg"],
        Lz_over_L=cfg["Lz_over_L"],
        pi_w0_over_Lz=cfg["pi_w0_over_Lz"],
        Lz_over_zR=cfg["Lz_over_zR"],
        model=cfg["model"],
        p_pad=cfg["p_pad"],
    )
    amps = {m: complex(a[0], a[1]) for m, a in zip(modes, cfg["pulse"]["amplitudes"])}
    spec = PulseSpec(
        amplitudes=amps,
        fwhm=cfg["pulse"]["fwhm_over_delta"],
        center=cfg["pulse"]["center_over_delta"],
    )
    return spec, sys_cfg, cfg["retrieval"], cfg["dt_over_delta"], cfg


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("<json>", f"line {e.lineno}, column {e.colno}: {e.msg}")


def _mode_tag(m: ModeIndex) -> str:
    return f"m{m.m}_n{m.n}"


def _write_timeseries(path: Path, out, modes):
    cols = ["t_over_delta"]
    for m in modes:
        tag = _mode_tag(m)
        cols += [f"E_in_re_{tag}", f"E_in_im_{tag}", f"E_out_re_{tag}", f"E_out_im_{tag}"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for i, t in enumerate(out.t_grid):
            row = [_FMT.format(t)]
            for m in modes:
                row += [
                    _FMT.format(out.E_in[m][i].real),
                    _FMT.format(out.E_in[m][i].imag),
                    _FMT.format(out.E_out[m][i].real),
                    _FMT.format(out.E_out[m][i].imag),
                ]
            wr.writerow(row)


def _summary_dict(out, cfg_echo: dict) -> dict:
    return {
        "eta": out.eta,
        "Fprime": out.Fprime,
        "F": out.F,
        "tbar_over_delta": out.tbar,
        "storage_leakage": out.storage_leakage,
        "version": __version__,
        "config": cfg_echo,
    }


def cmd_run(config_path: str, out_dir: str, dt_ratio: float | None = None) -> int:
    try:
        raw = _load_json(config_path)
        spec, sys_cfg, direction, dt, echo = parse_run_config(raw)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if dt_ratio is not None:
        dt = dt_ratio
        echo["dt_over_delta"] = dt_ratio
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    try:
        out = run_protocol(spec, sys_cfg, direction, dt=dt)
    except (FloatingPointError, QuadratureError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    _write_timeseries(outp / "timeseries.csv", out, list(sys_cfg.modes))
    with open(outp / "summary.json", "w") as fh:
        json.dump(_summary_dict(out, echo), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"eta={out.eta:.6f} Fprime={out.Fprime:.6f} F={out.F:.6f} -> {outp}")
    return 0


def _set_path(d: dict, path: str, value):
    keys = path.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def _sweep_point(args):
    base, assignments = args
    try:
        raw = copy.deepcopy(base)
        for path, value in assignments:
            _set_path(raw, path, value)
        spec, sys_cfg, direction, dt, _ = parse_run_config(raw)
        out = run_protocol(spec, sys_cfg, direction, dt=dt)
        return (out.eta, out.Fprime, out.F, "")
    except Exception as e:  # per-point failures recorded, sweep continues
        return (math.nan, math.nan, math.nan, f"{type(e).__name__}: {e}")


def cmd_sweep(config_path: str, out_dir: str, workers: int = 1) -> int:
    try:
        raw = _load_json(config_path)
        if "base" not in raw or "axes" not in raw:
            raise ConfigError("base/axes", "sweep config needs 'base' and 'axes'")
        base = raw["base"]
        normalize_run_config(base)  # fail fast with field diagnostics
        axes = raw["axes"]
        if not isinstance(axes, list) or not axes:
            raise ConfigError("axes", "expected a non-empty list")
        paths, columns, values = [], [], []
        for i, ax in enumerate(axes):
            if not isinstance(ax, dict) or "path" not in ax or "values" not in ax:
                raise ConfigError(f"axes[{i}]", "each axis needs 'path' and 'values'")
            if not isinstance(ax["values"], list) or not ax["values"]:
                raise ConfigError(f"axes[{i}].values", "expected a non-empty list")
            paths.append(ax["path"])
            columns.append(ax.get("column", ax["path"].replace(".", "_")))
            values.append(ax["values"])
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    grid = list(itertools.product(*values))  # lexicographic in declared axis order
    tasks = [(base, list(zip(paths, point))) for point in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    n_failed = 0
    with open(outp / "sweep.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(columns + ["eta", "Fprime", "F", "error"])
        for point, (eta, fp, f, err) in zip(grid, results):
            row = [_FMT.format(v) for v in point]
            row += [_FMT.format(eta), _FMT.format(fp), _FMT.format(f), err]
            wr.writerow(row)
            n_failed += bool(err)
    print(f"{len(grid)} points ({n_failed} failed) -> {outp / 'sweep.csv'}")
    return 0


def cmd_design(config_path: str, out_dir: str) -> int:
    try:
        raw = _load_json(config_path)
        dp = DesignPoint(
            oscillator_strength=_need(raw, "oscillator_strength", float, "oscillator_strength"),
            ion_density=_need(raw, "ion_density_per_m3", float, "ion_density_per_m3"),
            wavelength=_need(raw, "wavelength_m", float, "wavelength_m"),
            Delta=2.0 * math.pi * _need(raw, "Delta_over_2pi_Hz", float, "Delta_over_2pi_Hz"),
            Omega_over_Delta_sq=_need(raw, "Omega_over_Delta_sq", float, "Omega_over_Delta_sq"),
            kappa=_need(raw, "kappa_per_s", float, "kappa_per_s"),
            delta=_need(raw, "delta_switch_s", float, "delta_switch_s"),
            Lz=_need(raw, "Lz_m", float, "Lz_m"),
            beam_diameter=_need(raw, "beam_diameter_m", float, "beam_diameter_m"),
            gamma_S=float(raw.get("gamma_S_per_s", 0.0)),
            gamma_P=float(raw.get("gamma_P_per_s", 0.0)),
            g2N=float(raw["g2N_s2"]) if "g2N_s2" in raw else None,
            n_host=float(raw.get("n_host", 1.45)),
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    report = design_point(dp)
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    with open(outp / "design_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for k, v in sorted(report.items()):
        print(f"{k}: {v}")
    return 0


def cmd_capacity(config_path: str, out_dir: str) -> int:
    try:
        raw = _load_json(config_path)
        if "w0_over_Lz" in raw:
            w0_over_Lz = _need(raw, "w0_over_Lz", float, "w0_over_Lz")
        elif "pi_w0_over_Lz" in raw:
            w0_over_Lz = _need(raw, "pi_w0_over_Lz", float, "pi_w0_over_Lz") / math.pi
        else:
            raise ConfigError("w0_over_Lz", "missing required field")
        inp = CapacityInput(
            fresnel_number=_need(raw, "fresnel_number", float, "fresnel_number"),
            mirror_transmittance=_need(raw, "mirror_transmittance", float, "mirror_transmittance"),
            alpha_max=_need(raw, "alpha_max", float, "alpha_max"),
            w0_over_Lz=w0_over_Lz,
            T_over_delta_per_pulse=_need(raw, "T_over_delta_per_pulse", float, "T_over_delta_per_pulse"),
            rho_min=_need(raw, "rho_min", float, "rho_min"),
            lambda_c_over_Lz=_need(raw, "lambda_c_over_Lz", float, "lambda_c_over_Lz"),
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    report = capacity_estimate(inp)
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    with open(outp / "capacity_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for k, v in sorted(report.items()):
        print(f"{k}: {v}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cavraman",
        description="Multimode cavity Raman memory: runs, sweeps, design and capacity reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single storage+retrieval run")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--dt-ratio", type=float, default=None, help="override dt/delta")

    p_sweep = sub.add_parser("sweep", help="grid sweep writing one CSV row per point")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default="out")
    p_sweep.add_argument("--workers", type=int, default=1)

    p_design = sub.add_parser("design", help="physical design-point report")
    p_design.add_argument("--config", required=True)
    p_design.add_argument("--out", default="out")

    p_cap = sub.add_parser("capacity", help="mode-count and pulse-capacity report")
    p_cap.add_argument("--config", required=True)
    p_cap.add_argument("--out", default="out")

    # --seed reserved for the microscopic oracle entry points
    for p in (p_run, p_sweep, p_design, p_cap):
        p.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, dt_ratio=args.dt_ratio)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.out, workers=args.workers)
    if args.command == "design":
        return cmd_design(args.config, args.out)
    return cmd_capacity(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
