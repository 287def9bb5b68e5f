"""Figures of merit: photon numbers, efficiency, and envelope correlation.

Photon numbers are trapezoid integrals of summed per-mode intensities on the
simulation grid.  The envelope fidelity F'(tbar) correlates the retrieved
field against the delayed input as recorded (the input is not time-reversed,
matching the way the figure of merit is defined for this memory), and tbar is
chosen to maximize F'.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = ["photon_number", "fidelity_correlation", "find_tbar"]


def _as_array(series) -> np.ndarray:
    """Accept dict[mode -> series] or array (n,) / (n, K); return (n, K)."""
    if isinstance(series, dict):
        arr = np.stack([np.asarray(v, dtype=complex) for v in series.values()], axis=1)
    else:
        arr = np.asarray(series, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
    return arr


def photon_number(series, t, window: tuple[float, float] | None = None, warn_edges: bool = True) -> float:
    """N = sum_mn int |E_mn(t)|^2 dt over the window (whole grid by default).

    Warns when the series has not decayed at the window edges (more than 1e-4
    of the peak), since the integral is then truncation-limited.
    """
    arr = _as_array(series)
    t = np.asarray(t, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t = t[mask]
        arr = arr[mask]
    intensity = np.abs(arr) ** 2
    total = intensity.sum(axis=1)
    peak = total.max() if total.size else 0.0
    if warn_edges and peak > 0 and (total[0] > 1e-4 * peak or total[-1] > 1e-4 * peak):
        warnings.warn("series not decayed at integration window edges", stacklevel=2)
    return float(np.trapezoid(total, t))


def _shifted_input(t_out, t_in, E_in, tbar):
    """E_in(t - tbar) sampled on the output grid, zero outside its support."""
    ts = t_out - tbar
    re = np.stack(
        [np.interp(ts, t_in, E_in[:, k].real, left=0.0, right=0.0) for k in range(E_in.shape[1])],
        axis=1,
    )
    im = np.stack(
        [np.interp(ts, t_in, E_in[:, k].imag, left=0.0, right=0.0) for k in range(E_in.shape[1])],
        axis=1,
    )
    return re + 1j * im


def fidelity_correlation(t_out, E_out, t_in, E_in, tbar: float) -> float:
    """F'(tbar) = |sum_mn int E*_out(t) E_in(t - tbar) dt|^2 / (N_in N_out)."""
    E_out = _as_array(E_out)
    E_in = _as_array(E_in)
    t_out = np.asarray(t_out, dtype=float)
    t_in = np.asarray(t_in, dtype=float)
    N_out = np.trapezoid((np.abs(E_out) ** 2).sum(axis=1), t_out)
    N_in = np.trapezoid((np.abs(E_in) ** 2).sum(axis=1), t_in)
    if N_in <= 0 or N_out <= 0:
        raise ValueError("both series need non-zero energy")
    shifted = _shifted_input(t_out, t_in, E_in, tbar)
    corr = np.trapezoid((np.conj(E_out) * shifted).sum(axis=1), t_out)
    return float(abs(corr) ** 2 / (N_in * N_out))


def find_tbar(t_out, E_out, t_in, E_in, search: tuple[float, float] | None = None):
    """Delay maximizing F': coarse grid scan then golden-section refinement.

    The scan covers [0, 2T] by default, with the coarse step five grid
    spacings and the refinement taken down to a tenth of a grid spacing.
    Flat correlations (dynamic range below 1e-12) return (0.0, 0.0).
    """
    E_out_a = _as_array(E_out)
    E_in_a = _as_array(E_in)
    t_out = np.asarray(t_out, dtype=float)
    t_in = np.asarray(t_in, dtype=float)
    if (
        np.trapezoid((np.abs(E_out_a) ** 2).sum(axis=1), t_out) <= 0
        or np.trapezoid((np.abs(E_in_a) ** 2).sum(axis=1), t_in) <= 0
    ):
        return 0.0, 0.0
    dt = t_out[1] - t_out[0]
    if search is None:
        T = t_out[-1] - t_out[0]
        search = (0.0, 2.0 * T)

    def f(tb):
        return fidelity_correlation(t_out, E_out_a, t_in, E_in_a, tb)

    coarse = np.arange(search[0], search[1] + 5 * dt, 5 * dt)
    vals = np.array([f(tb) for tb in coarse])
    if vals.max() - vals.min() < 1e-12:
        return 0.0, 0.0
    i = int(np.argmax(vals))
    lo = coarse[max(i - 1, 0)]
    hi = coarse[min(i + 1, len(coarse) - 1)]

    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > dt / 10.0:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    tbar = (a + b) / 2.0
    return float(tbar), float(f(tbar))
