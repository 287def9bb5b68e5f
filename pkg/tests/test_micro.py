import math

import numpy as np
import pytest

from cavraman import MicroConfig, MicroState, ModeIndex, PulseSpec, SystemConfig, micro_rhs, run_micro_protocol, run_protocol

M00 = ModeIndex(0, 0)


class TestMicroConfig:
    def test_rejects_zero_detuning(self):
        cfg = SystemConfig.dimensionless(T_over_delta=5.0)
        with pytest.raises(ValueError):
            MicroConfig(cfg=cfg, Delta=0.0, Omega=1.0)

    def test_separation_builder(self):
        cfg = SystemConfig.dimensionless(kappa_delta=2.0, Gamma_delta=2.0, T_over_delta=5.0)
        mcfg = MicroConfig.from_collective(cfg, separation=20.0)
        gR = math.sqrt(2.0 * 2.0)
        assert mcfg.Omega == pytest.approx(20.0 * gR)
        assert mcfg.Delta == pytest.approx(400.0 * gR)
        assert mcfg.Delta / mcfg.Omega == pytest.approx(20.0)
        assert mcfg.g_collective == pytest.approx(mcfg.Omega)

    def test_atom_sampling_reproducible(self):
        cfg = SystemConfig.dimensionless(T_over_delta=5.0)
        mcfg = MicroConfig.from_collective(cfg, seed=11)
        x1, y1, z1, G1 = mcfg.sample_atoms()
        x2, y2, z2, G2 = mcfg.sample_atoms()
        assert np.array_equal(x1, x2) and np.array_equal(G1, G2)
        # calibration: sampled collective coupling matches the requested one
        assert np.sum(np.abs(G1[0]) ** 2) == pytest.approx(mcfg.g_collective**2)


class TestDecoupledAtom:
    def test_optical_coherence_free_decay(self):
        cfg = SystemConfig.dimensionless(kappa_delta=1.0, Gamma_delta=0.0, T_over_delta=5.0)
        mcfg = MicroConfig(cfg=cfg, Delta=40.0, Omega=0.0, gamma_P=0.3, n_atoms=4)
        atoms = mcfg.sample_atoms()
        state = MicroState(
            t=0.0,
            E=np.zeros(1, dtype=complex),
            P=np.ones(4, dtype=complex),
            S=np.zeros(4, dtype=complex),
        )
        dt, n = 1e-3, 500
        y = state
        for i in range(n):
            # RK4 on the dataclass via the public derivative
            def f(s):
                return micro_rhs(s, None, mcfg, atoms=atoms)

            k1 = f(y)
            k2 = f(MicroState(y.t + dt / 2, y.E + dt / 2 * k1.E, y.P + dt / 2 * k1.P, y.S + dt / 2 * k1.S))
            k3 = f(MicroState(y.t + dt / 2, y.E + dt / 2 * k2.E, y.P + dt / 2 * k2.P, y.S + dt / 2 * k2.S))
            k4 = f(MicroState(y.t + dt, y.E + dt * k3.E, y.P + dt * k3.P, y.S + dt * k3.S))
            y = MicroState(
                y.t + dt,
                y.E + dt / 6 * (k1.E + 2 * k2.E + 2 * k3.E + k4.E),
                y.P + dt / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P),
                y.S + dt / 6 * (k1.S + 2 * k2.S + 2 * k3.S + k4.S),
            )
        expected = np.exp(-(0.3 + 40.0j) * dt * n)
        assert np.allclose(y.P, expected, atol=1e-6)
        assert np.all(y.S == 0) and np.all(y.E == 0)


def _micro_eta(Delta_S, compensate):
    cfg = SystemConfig.dimensionless(
        kappa_delta=2.0, Gamma_delta=2.0, T_over_delta=6.0,
    )
    mcfg = MicroConfig.from_collective(
        cfg, separation=10.0, n_atoms=100, seed=3,
        compensate_light_shift=compensate, Delta_S=Delta_S,
    )
    spec = PulseSpec(amplitudes={M00: 1.0 + 0j}, fwhm=1.2, center=-3.0)
    t_r, out, _ = run_micro_protocol(mcfg, spec, "backward")
    return float(np.trapezoid(np.abs(out[:, 0]) ** 2, t_r))


class TestLightShift:
    def test_two_photon_line_pulled_by_control(self):
        # uncompensated runs scan the two-photon detuning: the efficiency peak
        # sits at Delta_S = Omega^2/Delta, not at zero
        cfg = SystemConfig.dimensionless(kappa_delta=2.0, Gamma_delta=2.0, T_over_delta=6.0)
        mcfg = MicroConfig.from_collective(cfg, separation=10.0)
        shift = mcfg.Omega**2 / mcfg.Delta
        etas = {ds: _micro_eta(ds * shift, compensate=False) for ds in (0.0, 0.5, 1.0, 1.5, 2.0)}
        best = max(etas, key=etas.get)
        assert best == 1.0
        assert etas[1.0] > 1.8 * etas[0.0]

    def test_compensation_flag_equivalent_to_tuned_control(self):
        cfg = SystemConfig.dimensionless(kappa_delta=2.0, Gamma_delta=2.0, T_over_delta=6.0)
        mcfg = MicroConfig.from_collective(cfg, separation=10.0)
        shift = mcfg.Omega**2 / mcfg.Delta
        eta_flag = _micro_eta(None, compensate=True)
        eta_manual = _micro_eta(shift, compensate=False)
        assert eta_flag == pytest.approx(eta_manual, rel=1e-12)


class TestCollectiveAgreement:
    def test_retrieved_envelope_tracks_collective_model(self):
        # single seed, 100 atoms: coarse agreement; the acceptance suite runs
        # the full 200-atom three-seed comparison at 5 percent
        cfg = SystemConfig.dimensionless(kappa_delta=2.0, Gamma_delta=2.0, T_over_delta=6.0)
        mcfg = MicroConfig.from_collective(cfg, separation=15.0, n_atoms=100, seed=1)
        spec = PulseSpec(amplitudes={M00: 1.0 + 0j}, fwhm=1.2, center=-3.0)
        t_r, out, _ = run_micro_protocol(mcfg, spec, "backward")
        ref = run_protocol(spec, cfg, "backward", dt=1.0 / 400)
        mask = ref.t_grid >= 0
        ref_interp = np.interp(t_r, ref.t_grid[mask], ref.E_out[M00][mask].real) + 1j * np.interp(
            t_r, ref.t_grid[mask], ref.E_out[M00][mask].imag
        )
        l2 = np.sqrt(
            np.trapezoid(np.abs(out[:, 0] - ref_interp) ** 2, t_r)
            / np.trapezoid(np.abs(ref_interp) ** 2, t_r)
        )
        assert l2 < 0.15
