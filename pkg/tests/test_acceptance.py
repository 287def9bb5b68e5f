"""Acceptance suite: every release criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  The figure-regeneration criterion for the plotting companion
package is exercised by that package's own suite (frontend/tests); everything
here runs without it.
"""

import math
import time

import numpy as np
import pytest

from cavraman import (
    CapacityInput,
    DesignPoint,
    MicroConfig,
    ModeIndex,
    PulseSpec,
    SystemConfig,
    capacity_estimate,
    design_point,
    diffraction_loss,
    echo_backward,
    echo_forward,
    run_micro_protocol,
    run_protocol,
    transverse_overlap,
)
from cavraman.dynamics import integrate
from cavraman.hg_modes import alpha_pm, coupling_B_factorized, coupling_B_numeric
from cavraman.protocol import run_retrieval, run_storage
from cavraman import stored_spin_analytic

from conftest import l2_relative

M00 = ModeIndex(0, 0)
M10 = ModeIndex(1, 0)


def report(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {status}: {detail}")
    assert ok, detail


def fig2_cfg(**kw):
    base = dict(modes=((0, 0),), kappa_delta=4.2, Gamma_delta=4.2, T_over_delta=30.0)
    base.update(kw)
    return SystemConfig.dimensionless(**base)


def pulse(fwhm=1.0, center=-15.0, amplitudes=None):
    return PulseSpec(amplitudes=amplitudes or {M00: 1.0 + 0j}, fwhm=fwhm, center=center)


@pytest.fixture(scope="module")
def long_pulse_runs():
    """Shared delta_p = 5 delta storage + both retrievals at the matched point."""
    cfg = fig2_cfg()
    spec = pulse(fwhm=5.0)
    state, sto = run_storage(spec, cfg)
    back = run_retrieval(state, cfg, "backward")
    fwd = run_retrieval(state, cfg, "forward")
    return cfg, spec, state, sto, back, fwd


def test_criterion_01_fig2_point():
    t0 = time.perf_counter()
    out = run_protocol(pulse(), fig2_cfg(), "backward")
    wall = time.perf_counter() - t0
    ok = abs(out.eta - 0.99) <= 0.02 and wall < 5.0
    report(1, ok, f"fig2 point eta={out.eta:.4f} (0.99+-0.02), runtime {wall:.2f}s < 5s")


def test_criterion_02_fig2_detuned_point():
    out = run_protocol(pulse(fwhm=2.0), fig2_cfg(delta_mn_delta=0.6), "backward")
    report(2, out.eta >= 0.97, f"detuned point (delta_mn delta=0.6, fwhm=2delta) eta={out.eta:.4f} >= 0.97")


def test_criterion_03_fig3_optimum():
    grid = [1.0, 2.0, 3.0, 4.0, 4.2, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
    eta5 = {}
    for kd in grid:
        eta5[kd] = run_protocol(pulse(fwhm=5.0), fig2_cfg(kappa_delta=kd), "backward").eta
    best = max(eta5, key=eta5.get)
    tail = [eta5[k] for k in grid if k >= 7.0]
    near = [4.0, 4.2, 5.0, 6.0]
    eta1 = {kd: run_protocol(pulse(fwhm=1.0), fig2_cfg(kappa_delta=kd), "backward").eta for kd in near}
    ok = (
        4.0 <= best <= 6.0
        and all(a > b for a, b in zip(tail, tail[1:]))
        and all(eta1[k] <= eta5[k] for k in near)
    )
    report(
        3, ok,
        f"fig3 optimum at kappa delta={best} in [4, 6]; eta monotone beyond 7; "
        f"fwhm=delta curve below fwhm=5delta near optimum",
    )


def test_criterion_04_analytic_echo_match(long_pulse_runs):
    cfg, spec, state, sto, back, fwd = long_pulse_runs
    T = cfg.sched.T
    pred_b = echo_backward(back["t"], spec.envelope(-back["t"]), 4.2, 4.2, 0.0)
    err_b = l2_relative(back["E_out"][:, 0], pred_b, back["t"])
    pred_f = echo_forward(fwd["t"], spec.envelope(fwd["t"] - T), 4.2, 4.2, 0.0, T)
    err_f = l2_relative(fwd["E_out"][:, 0], pred_f, fwd["t"])

    gR = 0.01
    cfg_d = fig2_cfg(gammaR_delta=gR)
    state_d, _ = run_storage(spec, cfg_d)
    ret_d = run_retrieval(state_d, cfg_d, "backward")
    t = ret_d["t"]
    sel = np.abs(back["E_out"][:, 0]) > 0.05 * np.abs(back["E_out"][:, 0]).max()
    ratio = np.log(np.abs(ret_d["E_out"][sel, 0]) / np.abs(back["E_out"][sel, 0]))
    slope = np.polyfit(t[sel], ratio, 1)[0]
    slope_ok = abs(slope - (-2.0 * gR)) <= 0.05 * 2.0 * gR
    ok = err_b <= 0.02 and err_f <= 0.02 and slope_ok
    report(
        4, ok,
        f"echo match: backward L2={err_b:.4f}, forward L2={err_f:.4f} (<=0.02); "
        f"log-envelope slope={slope:.5f} vs -2 gammaR={-2*gR} (+-5%)",
    )


def test_criterion_05_storage_map(long_pulse_runs):
    cfg, spec, state, *_ = long_pulse_runs
    p_vals = np.arange(cfg.p_min, cfg.p_max + 1)
    sim = np.array([state.S[(M00, int(p))] for p in p_vals])
    pred = stored_spin_analytic(spec.envelope, p_vals, 4.2, 4.2, 0.0, 0.0, 1.0)
    err = np.linalg.norm(sim - pred) / np.linalg.norm(pred)
    report(5, err <= 0.05, f"stored spin profile vs bad-cavity formula: rel L2={err:.4f} <= 0.05")


def test_criterion_06_kernel_oracle():
    cfg = SystemConfig.dimensionless(
        modes=((0, 0), (1, 0), (2, 0)), theta0_deg=70.0, T_over_delta=5.0,
        pi_w0_over_Lz=0.005, Lz_over_zR=0.15, model="full",
    )
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(20):
        t = float(rng.uniform(-5.0, 0.0))
        fi = ModeIndex(int(rng.integers(0, 3)), int(rng.integers(0, 2)))
        si = (ModeIndex(int(rng.integers(0, 3)), int(rng.integers(0, 2))), int(rng.integers(-6, 8)))
        bf = coupling_B_factorized(t, fi, si, cfg.sched, cfg.geom)
        bn = coupling_B_numeric(t, fi, si, cfg.sched, cfg.geom)
        worst = max(worst, abs(bf - bn))
    # |q_x w0| along this schedule stays within 1
    qmax = abs(cfg.engine().qx_rate * 5.0 * cfg.geom.w0)
    assert qmax <= 1.0

    geom = cfg.geom
    worst_small_q = 0.0
    for qw0 in (0.01, 0.03, 0.05):
        q = qw0 / geom.w0
        for m in range(6):
            for mp in range(6):
                val = transverse_overlap(q, ModeIndex(m, 0), ModeIndex(mp, 0), geom)
                first = 0j
                if mp == m:
                    first = 1.0
                elif mp == m + 1:
                    first = -1j * alpha_pm(q, geom.w0, m, +1)
                elif mp == m - 1:
                    first = -1j * alpha_pm(q, geom.w0, m, -1)
                worst_small_q = max(worst_small_q, abs(val - first) / qw0**2)
    ok = worst <= 1e-3 and worst_small_q <= 2.0
    report(
        6, ok,
        f"kernel oracle: 20 tuples worst |factorized - volume|={worst:.2e} <= 1e-3; "
        f"small-q residual/(q w0)^2={worst_small_q:.3f} <= 2",
    )


def test_criterion_07_crosstalk_condition():
    rho1_deg = math.degrees(math.atan(0.02 * 5.0 * math.sqrt(2.0)))
    grid = np.linspace(rho1_deg, 90.0, 5)
    spec = PulseSpec(
        amplitudes={M00: math.sqrt(0.5) + 0j, M10: math.sqrt(0.5) + 0j},
        fwhm=0.7, center=-3.5,
    )
    F = []
    for th in grid:
        cfg = SystemConfig.dimensionless(
            modes=((0, 0), (1, 0)), theta0_deg=float(th), T_over_delta=5.0,
            pi_w0_over_Lz=0.02, model="full",
        )
        F.append(run_protocol(spec, cfg, "backward").F)
    drop = F[-1] - F[0]
    monotone = all(F[i] <= F[i + 1] + 1e-9 for i in range(len(F) - 1))
    ok = drop >= 0.05 and monotone
    report(
        7, ok,
        f"cross-talk: F(90deg)={F[-1]:.4f} - F(rho=1 at {rho1_deg:.1f}deg)={F[0]:.4f} "
        f"= {drop:.4f} >= 0.05, monotone over 5-point grid {np.round(F, 4).tolist()}",
    )


def test_criterion_08_capacity_and_loss():
    cutoff = max(m for m in range(60) if diffraction_loss(m, 10.0) <= 1e-4)
    rep = capacity_estimate(CapacityInput(
        fresnel_number=10.0, mirror_transmittance=1e-3, alpha_max=1e-4,
        w0_over_Lz=0.02 / math.pi, T_over_delta_per_pulse=5.0, rho_min=10.0,
        lambda_c_over_Lz=1.53e-6 / 2.5e-3,
    ))
    lo, hi = rep["theta_range_deg"]
    ok = (
        abs(cutoff - 30) <= 1
        and abs(lo - 80.0) <= 1.0
        and abs(hi - 100.0) <= 1.0
        and abs(rep["n_pulses"] - 100) <= 20
    )
    report(
        8, ok,
        f"loss cutoff m={cutoff} (30+-1); theta range [{lo:.1f}, {hi:.1f}] "
        f"(80-100 deg); pulse capacity {rep['n_pulses']} (100+-20)",
    )


def test_criterion_09_design_point():
    rep = design_point(DesignPoint(
        oscillator_strength=2e-7, ion_density=7e23, wavelength=1.53e-6,
        Delta=2 * math.pi * 1e8, Omega_over_Delta_sq=2e-5, kappa=1e8,
        delta=2e-7, Lz=2.5e-3, beam_diameter=2.5e-3, g2N=5e19,
    ))
    ok = (
        rep["Gamma_s"] == pytest.approx(1e8, rel=1e-12)
        and rep["kappa_s"] == 1e8
        and abs(rep["Omega_over_2pi_Hz"] - 4.5e5) <= 0.05 * 4.5e5
        and 65.0 / 2 <= rep["intensity_W_cm2"] <= 65.0 * 2
        and 1.6 / 2 <= rep["power_W"] <= 1.6 * 2
    )
    report(
        9, ok,
        f"design point: Gamma={rep['Gamma_s']:.3e}=kappa, Omega/2pi={rep['Omega_over_2pi_Hz']:.3e} "
        f"(4.5e5+-5%), I={rep['intensity_W_cm2']:.1f} W/cm2 (65x2), P={rep['power_W']:.2f} W (1.6x2)",
    )


def test_criterion_10_micro_oracle():
    cfg = SystemConfig.dimensionless(kappa_delta=4.2, Gamma_delta=4.2, T_over_delta=10.0)
    spec = PulseSpec(amplitudes={M00: 1.0 + 0j}, fwhm=2.0, center=-5.0)
    ref = run_protocol(spec, cfg, "backward", dt=1.0 / 400)
    mask = ref.t_grid >= 0
    outs = []
    mcfg = MicroConfig.from_collective(cfg, separation=20.0, n_atoms=200, box_w0=1.0)
    # Delta dominates every other rate by >= 20x
    rates = [mcfg.Omega, mcfg.g_collective, cfg.kappa[M00], cfg.Gamma, 1.0 / spec.fwhm]
    assert mcfg.Delta >= 20.0 * max(rates)
    for seed in (1, 2, 3):
        t_r, out, _ = run_micro_protocol(mcfg, spec, "backward", seed=seed)
        outs.append(out[:, 0])
    avg = np.mean(outs, axis=0)
    ref_i = np.interp(t_r, ref.t_grid[mask], ref.E_out[M00][mask].real) + 1j * np.interp(
        t_r, ref.t_grid[mask], ref.E_out[M00][mask].imag
    )
    err = l2_relative(avg, ref_i, t_r)
    report(
        10, err <= 0.05,
        f"microscopic oracle (200 atoms, 3 seeds, Delta/max rate >= 20): "
        f"retrieved-envelope L2={err:.4f} <= 0.05",
    )


def test_criterion_11_property_suite():
    details = []

    # linearity / scale invariance
    cfg = fig2_cfg(T_over_delta=6.0)
    eng = cfg.engine()
    spec = PulseSpec(amplitudes={M00: 1.0 + 0j}, fwhm=1.0, center=-3.0)
    y0 = np.zeros(eng.K + eng.K * eng.P, dtype=complex)

    def drv(c):
        return lambda t: np.array([c * spec.envelope(t)], dtype=complex)

    _, E1, _ = integrate(cfg, y0, -6.0, 0.0, 0.01, drv(1.0))
    lin_ok = all(
        np.allclose(integrate(cfg, y0, -6.0, 0.0, 0.01, drv(c))[1], c * E1, rtol=1e-12, atol=1e-13)
        for c in (2.0, 1j)
    )
    details.append(f"linearity {'ok' if lin_ok else 'BROKEN'}")

    # transverse decoupling
    cfg3 = SystemConfig.dimensionless(modes=((0, 0), (1, 0), (2, 2)), T_over_delta=6.0)
    spec3 = PulseSpec(amplitudes={M10: 1.0 + 0j}, fwhm=1.0, center=-3.0)
    out3 = run_protocol(spec3, cfg3, "backward")
    dec = max(np.max(np.abs(out3.E_out[m])) for m in (M00, ModeIndex(2, 2)))
    details.append(f"decoupling {dec:.1e}<=1e-12")

    # passivity
    out = run_protocol(pulse(), fig2_cfg(), "backward")
    pas_ok = out.eta + out.storage_leakage <= 1.0 + 1e-6
    details.append(f"passivity in={1.0:.3f} out={out.eta + out.storage_leakage:.6f}")

    # determinism
    a = run_protocol(spec3, SystemConfig.dimensionless(modes=((1, 0),), T_over_delta=6.0), "backward")
    b = run_protocol(spec3, SystemConfig.dimensionless(modes=((1, 0),), T_over_delta=6.0), "backward")
    det_ok = np.array_equal(a.E_out[M10], b.E_out[M10]) and a.eta == b.eta
    details.append(f"determinism {'ok' if det_ok else 'BROKEN'}")

    # RK4 order on the benchmark
    cfgb = fig2_cfg()
    specb = pulse()
    wb = np.array([1.0 + 0j])

    def dfn(t):
        return wb * specb.envelope(t)

    y0b = np.zeros(cfgb.engine().K * (1 + cfgb.engine().P), dtype=complex)

    def final(dt):
        return integrate(cfgb, y0b, -30.0, -22.0, dt, dfn)[2]

    ref = final(1.0 / 400)
    errs = [np.linalg.norm(final(dt) - ref) for dt in (1.0 / 25, 1.0 / 50, 1.0 / 100)]
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    rk_ok = 10.0 < r1 < 24.0 and 10.0 < r2 < 26.0
    details.append(f"rk4 halving ratios {r1:.1f}, {r2:.1f} (~16)")

    ok = lin_ok and dec <= 1e-12 and pas_ok and det_ok and rk_ok
    report(11, ok, "; ".join(details))
