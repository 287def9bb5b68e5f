"""Coupled cavity-mode / spin-wave equations of motion and their integration.

Two right-hand sides are provided.  The simplified model couples each
transverse cavity mode (m, n) only to its own ladder of longitudinal spin
waves p through the scalar kernel sinc[(t_eff + t_p) pi / delta]; transverse
modes evolve independently.  The full model uses the factorized coupling
kernel including the grating-dressed transverse overlaps, so neighbouring
m-orders mix once the transverse grating component q_x(t) is non-zero.

All fields and coherences are complex envelopes (c-number equations); the
mode-shift phases e^{+-i delta_mn t} are kept explicitly in the equations
rather than absorbed into a rotating frame.  Integration is classical
fixed-step RK4.  State vectors are packed [E (K), S (K x P)]; reductions use
numpy matmul/tensordot with a fixed order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np

from . import control
from .hg_modes import BeamGeometry, ModeIndex, _overlap_matrix_raw, sinc

__all__ = [
    "SystemConfig",
    "SimState",
    "rhs_simplified",
    "rhs_full",
    "step_rk4",
    "input_output",
    "integrate",
]

_MODELS = ("simplified", "full")


@dataclass(eq=False)
class SystemConfig:
    """Cavity, medium and schedule parameters for one protocol run.

    kappa and delta_shift map each transverse mode to its cavity decay
    half-rate kappa_mn and frequency shift delta_mn.  Gamma is the collective
    transition rate; the coupling is derived from it, g_R sqrt(N) =
    sqrt(2 Gamma / delta).  Longitudinal spin waves are truncated to
    p in [p_min, p_max].
    """

    modes: tuple[ModeIndex, ...]
    p_min: int
    p_max: int
    kappa: Mapping[ModeIndex, float]
    delta_shift: Mapping[ModeIndex, float]
    Gamma: float
    gamma_R: float
    delta: float
    geom: BeamGeometry
    sched: control.RotationSchedule
    model: str = "simplified"

    def __post_init__(self):
        if not self.modes:
            raise ValueError("at least one transverse mode is required")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("duplicate transverse modes")
        if self.p_max < self.p_min:
            raise ValueError("empty longitudinal index range")
        for mode in self.modes:
            if self.kappa[mode] <= 0:
                raise ValueError(f"kappa must be positive for mode {mode}")
        if self.Gamma < 0 or self.gamma_R < 0:
            raise ValueError("rates must be non-negative")
        if self.delta <= 0:
            raise ValueError("switching time delta must be positive")
        if self.model not in _MODELS:
            raise ValueError(f"model must be one of {_MODELS}")
        self._engine = None

    @property
    def g_collective(self) -> float:
        """Collective coupling g_R sqrt(N) = sqrt(2 Gamma / delta)."""
        return math.sqrt(2.0 * self.Gamma / self.delta)

    def with_phase(self, phase: control.Phase) -> "SystemConfig":
        """Copy of this config with the schedule switched to another protocol phase."""
        cfg = SystemConfig(
            modes=self.modes, p_min=self.p_min, p_max=self.p_max,
            kappa=self.kappa, delta_shift=self.delta_shift,
            Gamma=self.Gamma, gamma_R=self.gamma_R, delta=self.delta,
            geom=self.geom, sched=replace(self.sched, phase=phase), model=self.model,
        )
        return cfg

    def engine(self) -> "_Engine":
        if self._engine is None:
            self._engine = _Engine(self)
        return self._engine

    @classmethod
    def dimensionless(
        cls,
        modes=((0, 0),),
        kappa_delta=4.2,
        Gamma_delta=4.2,
        gammaR_delta=0.0,
        delta_mn_delta=0.0,
        T_over_delta=30.0,
        theta0_deg=90.0,
        Lz_over_L=1.0,
        pi_w0_over_Lz=0.02,
        Lz_over_zR=0.1,
        model="simplified",
        p_pad=8,
        phase: control.Phase = "storage",
    ) -> "SystemConfig":
        """Build a config in units of the switching time (delta = 1).

        A canonical geometry and sweep realizing the requested dimensionless
        groups is constructed internally; the dynamics depend only on the
        groups themselves (kappa delta, Gamma delta, T/delta, theta0,
        pi w0/Lz, Lz/zR, Lz/L).
        """
        mode_list = tuple(m if isinstance(m, ModeIndex) else ModeIndex(*m) for m in modes)
        K = len(mode_list)
        kappas = np.broadcast_to(np.asarray(kappa_delta, dtype=float), (K,))
        shifts = np.broadcast_to(np.asarray(delta_mn_delta, dtype=float), (K,))
        if not 0 < Lz_over_L <= 1:
            raise ValueError("Lz_over_L must lie in (0, 1]")
        if not 0 < Lz_over_zR < 2:
            raise ValueError("Lz_over_zR must lie in (0, 2)")
        Lz = 300.0
        L = Lz / Lz_over_L
        w0 = pi_w0_over_Lz * Lz / math.pi
        zR = Lz / Lz_over_zR
        lambda_s = math.pi * w0**2 / zR
        geom = BeamGeometry(w0=w0, lambda_s=lambda_s, Lz=Lz, L=L, A=Lz**2)
        theta0 = math.radians(theta0_deg)
        lambda_c = Lz / 100.0
        # Dtheta chosen so the canonical sweep has switching time exactly 1
        Dtheta = T_over_delta * lambda_c / (Lz * math.sin(theta0))
        sched = control.RotationSchedule(
            theta0=theta0, Dtheta=Dtheta, T=T_over_delta, lambda_c=lambda_c, phase=phase,
        )
        p_max = math.ceil(T_over_delta / Lz_over_L) + p_pad
        return cls(
            modes=mode_list,
            p_min=-p_pad,
            p_max=p_max,
            kappa={m: float(k) for m, k in zip(mode_list, kappas)},
            delta_shift={m: float(s) for m, s in zip(mode_list, shifts)},
            Gamma=float(Gamma_delta),
            gamma_R=float(gammaR_delta),
            delta=1.0,
            geom=geom,
            sched=sched,
            model=model,
        )


@dataclass
class SimState:
    """Complex amplitudes of all cavity modes and spin waves at one instant."""

    t: float
    E: dict[ModeIndex, complex]
    S: dict[tuple[ModeIndex, int], complex]

    @classmethod
    def vacuum(cls, cfg: SystemConfig, t: float) -> "SimState":
        E = {m: 0j for m in cfg.modes}
        S = {(m, p): 0j for m in cfg.modes for p in range(cfg.p_min, cfg.p_max + 1)}
        return cls(t=t, E=E, S=S)


class _Engine:
    """Array-packed kernel and RHS evaluation for one (config, phase) pair."""

    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.modes = list(cfg.modes)
        self.K = len(self.modes)
        self.p_values = np.arange(cfg.p_min, cfg.p_max + 1)
        self.P = len(self.p_values)
        self.kappa = np.array([cfg.kappa[m] for m in self.modes])
        self.sqrt2k = np.sqrt(2.0 * self.kappa)
        self.dshift = np.array([cfg.delta_shift[m] for m in self.modes])
        self.g = cfg.g_collective
        self.gamma_R = cfg.gamma_R
        self.delta = cfg.delta
        geom, sched = cfg.geom, cfg.sched
        self.t_p = self.p_values * cfg.delta * geom.Lz / geom.L
        # full-model tables
        mi = np.array([m.m for m in self.modes])
        ni = np.array([m.n for m in self.modes])
        self.m_max = int(mi.max())
        dmn = (mi[None, :] - mi[:, None]) + (ni[None, :] - ni[:, None])
        self.t_gouy = dmn * cfg.delta * geom.Lz / (2 * math.pi * geom.zR)
        self.same_n = (ni[:, None] == ni[None, :]).astype(float)
        self.mi = mi
        # q_x(t_eff) = qx_rate * t_eff
        self.qx_rate = sched.k_c * math.cos(sched.theta0) * sched.rate
        self.w0 = geom.w0
        self.sched = sched

    def t_eff(self, t: float) -> float:
        return control.effective_time(self.sched, t)

    def pack(self, state: SimState) -> np.ndarray:
        E = np.array([state.E[m] for m in self.modes], dtype=complex)
        S = np.array(
            [[state.S[(m, p)] for p in self.p_values] for m in self.modes], dtype=complex
        )
        return np.concatenate([E, S.ravel()])

    def unpack(self, t: float, y: np.ndarray) -> SimState:
        E = {m: complex(y[k]) for k, m in enumerate(self.modes)}
        S_arr = y[self.K:].reshape(self.K, self.P)
        S = {
            (m, int(p)): complex(S_arr[k, j])
            for k, m in enumerate(self.modes)
            for j, p in enumerate(self.p_values)
        }
        return SimState(t=t, E=E, S=S)

    def kernel_diagonal(self, t_eff: float) -> np.ndarray:
        """Simplified-model kernel over p, shared by all transverse modes."""
        return sinc((t_eff + self.t_p) * math.pi / self.delta)

    def kernel_full(self, t_eff: float) -> np.ndarray:
        """Full kernel B[field, spin, p] = overlap(q_x) x sinc(rephasing)."""
        qw0 = self.qx_rate * t_eff * self.w0
        O_m = _overlap_matrix_raw(qw0, self.m_max, 64)
        O = O_m[np.ix_(self.mi, self.mi)] * self.same_n
        s = sinc((t_eff + self.t_gouy[:, :, None] + self.t_p[None, None, :]) * math.pi / self.delta)
        return O[:, :, None] * s

    def rhs(self, t: float, y: np.ndarray, drive: np.ndarray) -> np.ndarray:
        E = y[: self.K]
        S = y[self.K:].reshape(self.K, self.P)
        te = self.t_eff(t)
        ph = np.exp(1j * self.dshift * t)
        if self.cfg.model == "simplified":
            c = self.kernel_diagonal(te)
            dE = -self.kappa * E + self.sqrt2k * drive + 1j * self.g * ph * (S @ c)
            dS = -self.gamma_R * S + 1j * self.g * (np.conj(ph) * E)[:, None] * c[None, :]
        else:
            B = self.kernel_full(te)
            dE = -self.kappa * E + self.sqrt2k * drive + 1j * self.g * ph * np.tensordot(
                B, S, axes=([1, 2], [0, 1])
            )
            dS = -self.gamma_R * S + 1j * self.g * np.tensordot(
                np.conj(B), np.conj(ph) * E, axes=([0], [0])
            )
        return np.concatenate([dE, dS.ravel()])

    def step(self, t: float, y: np.ndarray, dt: float, drive_fn) -> np.ndarray:
        k1 = self.rhs(t, y, drive_fn(t))
        half = drive_fn(t + dt / 2)
        k2 = self.rhs(t + dt / 2, y + (dt / 2) * k1, half)
        k3 = self.rhs(t + dt / 2, y + (dt / 2) * k2, half)
        k4 = self.rhs(t + dt, y + dt * k3, drive_fn(t + dt))
        return y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _drive_array(engine: _Engine, drive) -> np.ndarray:
    if drive is None:
        return np.zeros(engine.K, dtype=complex)
    if isinstance(drive, Mapping):
        return np.array([drive.get(m, 0j) for m in engine.modes], dtype=complex)
    return np.broadcast_to(np.asarray(drive, dtype=complex), (engine.K,))


def rhs_simplified(state: SimState, drive: Mapping[ModeIndex, complex], cfg: SystemConfig) -> SimState:
    """Time derivative of the state in the simplified (transverse-diagonal) model."""
    if cfg.model != "simplified":
        raise ValueError("config selects the full model; use rhs_full")
    eng = cfg.engine()
    dy = eng.rhs(state.t, eng.pack(state), _drive_array(eng, drive))
    out = eng.unpack(state.t, dy)
    return out


def rhs_full(state: SimState, drive: Mapping[ModeIndex, complex], cfg: SystemConfig) -> SimState:
    """Time derivative including grating-induced transverse cross-talk."""
    if cfg.model != "full":
        raise ValueError("config selects the simplified model; use rhs_simplified")
    eng = cfg.engine()
    dy = eng.rhs(state.t, eng.pack(state), _drive_array(eng, drive))
    return eng.unpack(state.t, dy)


def step_rk4(
    state: SimState,
    drive_fn: Callable[[float], Mapping[ModeIndex, complex]],
    cfg: SystemConfig,
    dt: float,
) -> SimState:
    """Advance the state by one classical RK4 step of the selected model."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    eng = cfg.engine()
    y = eng.pack(state)
    if not np.all(np.isfinite(y.view(float))):
        raise ValueError("non-finite state amplitudes")
    y1 = eng.step(state.t, y, dt, lambda t: _drive_array(eng, drive_fn(t)))
    return eng.unpack(state.t + dt, y1)


def input_output(E_cav, E_in, kappa):
    """Single-ended cavity boundary relation E_out = sqrt(2 kappa) E_cav - E_in."""
    if np.any(np.asarray(kappa) <= 0):
        raise ValueError("kappa must be positive")
    return np.sqrt(2.0 * np.asarray(kappa)) * E_cav - E_in


def integrate(
    cfg: SystemConfig,
    y0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    drive_fn: Callable[[float], np.ndarray],
):
    """Fixed-step RK4 from t0 to t1, recording cavity amplitudes at every step.

    drive_fn must return a (K,) complex array.  Returns (t_grid, E_record,
    y_final) with E_record of shape (n_steps + 1, K).
    """
    eng = cfg.engine()
    n = int(round((t1 - t0) / dt))
    if n <= 0:
        raise ValueError("empty integration interval")
    h = (t1 - t0) / n
    t_grid = t0 + h * np.arange(n + 1)
    E_rec = np.empty((n + 1, eng.K), dtype=complex)
    y = y0.copy()
    E_rec[0] = y[: eng.K]
    for i in range(n):
        y = eng.step(t_grid[i], y, h, drive_fn)
        E_rec[i + 1] = y[: eng.K]
    if not np.all(np.isfinite(E_rec[-1].view(float))):
        raise FloatingPointError("integration diverged")
    return t_grid, E_rec, y
