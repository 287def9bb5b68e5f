"""Closed-form results: echo envelopes, rates, diffraction losses, capacity,
and the physical design calculator for a rare-earth-doped solid.

The echo formulas are bad-cavity results: they require kappa + Gamma to be
large compared to the input bandwidth and are exact at the impedance-matched
point kappa = Gamma.  Away from matching the printed coefficient
2 Gamma/(kappa + Gamma) is only the matched-regime limit of the full
dynamics; the simulator is the reference there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as c_light
from scipy.constants import e as q_e
from scipy.constants import epsilon_0, hbar, m_e
from scipy.special import gammaln

__all__ = [
    "DesignPoint",
    "CapacityInput",
    "collective_rate",
    "echo_backward",
    "echo_forward",
    "stored_spin_analytic",
    "gammaR_effective",
    "diffraction_loss",
    "diffraction_loss_pair",
    "capacity_estimate",
    "design_point",
]


def collective_rate(gR_sqN_squared: float, delta: float) -> float:
    """Collective transition rate Gamma = |g_R|^2 N delta / 2."""
    if gR_sqN_squared < 0 or delta <= 0:
        raise ValueError("inputs must be positive")
    return gR_sqN_squared * delta / 2.0


def echo_backward(t, E_in_of_minus_t, Gamma, kappa, gamma_R):
    """Time-reversed echo prediction E_out(t) = -[2G/(k+G)] E_in(-t) e^{-2 gamma_R t}.

    t is the retrieval grid; E_in_of_minus_t must already be the input series
    sampled at -t (for grids mirrored about zero this is just the reversed
    storage series).
    """
    t = np.asarray(t, dtype=float)
    amp = 2.0 * Gamma / (kappa + Gamma)
    return -amp * np.asarray(E_in_of_minus_t, dtype=complex) * np.exp(-2.0 * gamma_R * t)


def echo_forward(t, E_in_of_t_minus_T, Gamma, kappa, gamma_R, T):
    """Delayed echo prediction E_out(t) = -[2G/(k+G)] E_in(t - T) e^{-gamma_R T}."""
    amp = 2.0 * Gamma / (kappa + Gamma)
    return -amp * np.asarray(E_in_of_t_minus_T, dtype=complex) * math.exp(-gamma_R * T)


def stored_spin_analytic(
    E_in_fn,
    p_values,
    Gamma: float,
    kappa: float,
    delta_mn: float,
    gamma_R: float,
    delta: float,
    Lz_over_L: float = 1.0,
    bandwidth: float | None = None,
):
    """Bad-cavity prediction of the spin-wave profile at the end of storage.

    The spin wave with longitudinal index p is written at t = -t_p
    (t_p = p delta Lz/L), sampling the input there:

        S_p(0) = i g_R* sqrt(N) sqrt(2 kappa) delta / (kappa + Gamma)
                 x E_in(-t_p) e^{(i delta_mn - gamma_R) t_p}

    Valid when kappa + Gamma well exceeds the input bandwidth; a warning is
    emitted when the margin is below 5x.
    """
    if bandwidth is not None and (kappa + Gamma) < 5.0 * bandwidth:
        warnings.warn("bad-cavity formula outside its validity range", stacklevel=2)
    g = math.sqrt(2.0 * Gamma / delta)
    t_p = np.asarray(p_values, dtype=float) * delta * Lz_over_L
    coef = 1j * g * math.sqrt(2.0 * kappa) * delta / (kappa + Gamma)
    E_vals = np.asarray([E_in_fn(-tp) for tp in t_p], dtype=complex)
    return coef * E_vals * np.exp((1j * delta_mn - gamma_R) * t_p)


def gammaR_effective(gamma_S: float, gamma_P: float, Omega: float, Delta: float) -> float:
    """Raman coherence decay gamma_R = gamma_S + gamma_P |Omega|^2 / Delta^2."""
    if Delta == 0:
        raise ValueError("Delta must be non-zero")
    return gamma_S + gamma_P * abs(Omega) ** 2 / Delta**2


def diffraction_loss(m: int, N_F: float) -> float:
    """Round-trip diffraction loss of a confocal-cavity mode of order m.

    alpha_m = 4 sqrt(pi) (1/m!) 8^m (2 pi N_F)^{m+1/2} e^{-4 pi N_F},
    evaluated in log space and clamped to [0, 1].
    """
    if N_F <= 0:
        raise ValueError("Fresnel number must be positive")
    if m < 0 or m > 200:
        raise ValueError("m out of the supported range [0, 200]")
    log_a = (
        math.log(4.0)
        + 0.5 * math.log(math.pi)
        - gammaln(m + 1)
        + m * math.log(8.0)
        + (m + 0.5) * math.log(2.0 * math.pi * N_F)
        - 4.0 * math.pi * N_F
    )
    return math.exp(log_a) if log_a < 0.0 else 1.0


def diffraction_loss_pair(m: int, n: int, N_F: float) -> float:
    """Combined loss alpha_mn = 1 - (1 - alpha_m)(1 - alpha_n)."""
    am = diffraction_loss(m, N_F)
    an = diffraction_loss(n, N_F)
    return 1.0 - (1.0 - am) * (1.0 - an)


@dataclass(frozen=True)
class CapacityInput:
    """Inputs of the transverse-mode and pulse-capacity estimate."""

    fresnel_number: float
    mirror_transmittance: float
    alpha_max: float
    w0_over_Lz: float
    T_over_delta_per_pulse: float
    rho_min: float
    lambda_c_over_Lz: float

    def __post_init__(self):
        if self.fresnel_number <= 0:
            raise ValueError("fresnel_number must be positive")
        if not 0 < self.mirror_transmittance < 1:
            raise ValueError("mirror_transmittance must lie in (0, 1)")
        for name in ("alpha_max", "w0_over_Lz", "T_over_delta_per_pulse", "rho_min", "lambda_c_over_Lz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def capacity_estimate(inp: CapacityInput) -> dict:
    """Storage-capacity estimate: mode count, usable angles, pulse count.

    max_index: largest order m with alpha_m <= alpha_max.  n_transverse:
    number of pairs (m, n) with pair loss within budget (the square count
    (max_index+1)^2 is reported alongside).  The usable angle range comes
    from the cross-talk margin rho >= rho_min at m = max_index, and the pulse
    count divides that range by the sweep angle consumed per pulse.
    """
    m = 0
    while m <= 200 and diffraction_loss(m, inp.fresnel_number) <= inp.alpha_max:
        m += 1
    max_index = m - 1
    if max_index < 0:
        return {
            "max_index": -1,
            "n_transverse": 0,
            "n_transverse_square": 0,
            "theta_range_deg": None,
            "n_pulses": 0,
            "note": "no mode survives the loss budget",
        }
    alphas = np.array([diffraction_loss(k, inp.fresnel_number) for k in range(max_index + 1)])
    pair_ok = (1.0 - (1.0 - alphas[:, None]) * (1.0 - alphas[None, :])) <= inp.alpha_max
    n_transverse = int(pair_ok.sum())

    # rho(theta) = tan(theta) / [(pi w0/Lz)(T/delta) sqrt(m_max + 1)]
    denom = math.pi * inp.w0_over_Lz * inp.T_over_delta_per_pulse * math.sqrt(max_index + 1)
    tan_min = inp.rho_min * denom
    theta_lo = math.degrees(math.atan(tan_min))
    theta_hi = 180.0 - theta_lo
    if theta_lo >= 90.0:
        return {
            "max_index": max_index,
            "n_transverse": n_transverse,
            "n_transverse_square": (max_index + 1) ** 2,
            "theta_range_deg": None,
            "n_pulses": 0,
            "note": "cross-talk margin leaves no usable angle",
        }
    theta_range_rad = math.radians(theta_hi - theta_lo)
    # per-pulse sweep angle: (T_pulse/delta) x diffraction angle lambda_c/(Lz sin theta)
    theta_mid = math.radians(90.0)
    per_pulse = inp.T_over_delta_per_pulse * inp.lambda_c_over_Lz / math.sin(theta_mid)
    n_pulses = int(theta_range_rad / per_pulse)
    return {
        "max_index": max_index,
        "n_transverse": n_transverse,
        "n_transverse_square": (max_index + 1) ** 2,
        "theta_range_deg": (theta_lo, theta_hi),
        "n_pulses": n_pulses,
    }


@dataclass(frozen=True)
class DesignPoint:
    """Physical-unit parameter bundle for a solid-state implementation.

    g2N, when given, is used directly as the collective coupling |g|^2 N; the
    value derived from the oscillator strength is always reported alongside
    for comparison (the f -> dipole conversion carries host-crystal factors
    that are not pinned down here, so derived couplings are order-of-magnitude).
    """

    oscillator_strength: float
    ion_density: float          # 1/m^3
    wavelength: float           # m
    Delta: float                # one-photon detuning, rad/s
    Omega_over_Delta_sq: float  # (Omega/Delta)^2
    kappa: float                # 1/s
    delta: float                # switching time, s
    Lz: float                   # m
    beam_diameter: float        # m
    gamma_S: float = 0.0
    gamma_P: float = 0.0
    g2N: float | None = None    # s^-2, overrides the f-derived value
    n_host: float = 1.45

    def __post_init__(self):
        for name in (
            "oscillator_strength", "ion_density", "wavelength", "Delta",
            "Omega_over_Delta_sq", "kappa", "delta", "Lz", "beam_diameter",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"DesignPoint.{name} must be positive")
        if self.Omega_over_Delta_sq >= 0.1:
            raise ValueError("(Omega/Delta)^2 must be small for the Raman regime")


def design_point(dp: DesignPoint) -> dict:
    """Derived operating parameters and consistency checks for a design point.

    Conversions used (documented here because the report carries them):
      - dipole from oscillator strength: d^2 = 3 hbar e^2 f / (2 m_e omega);
      - collective coupling estimate: g^2 N = e^2 f n / (4 eps0 m_e n_host^2)
        (per-component dipole in the host);
      - control intensity I = 2 eps0 c E0^2 with E0 = hbar Omega / d;
      - Gaussian-beam power P = I pi w^2 / 2 with w the beam radius;
      - mirror transmittance 2 kappa L_rt / c for round-trip length L_rt
        (L for a ring, 2 L for a standing-wave cavity).
    """
    omega = 2.0 * math.pi * c_light / dp.wavelength
    f = dp.oscillator_strength
    g2N_from_f = q_e**2 * f * dp.ion_density / (4.0 * epsilon_0 * m_e * dp.n_host**2)
    g2N = dp.g2N if dp.g2N is not None else g2N_from_f

    gR2N = g2N * dp.Omega_over_Delta_sq
    Gamma = collective_rate(gR2N, dp.delta)
    Omega = dp.Delta * math.sqrt(dp.Omega_over_Delta_sq)
    gamma_R = gammaR_effective(dp.gamma_S, dp.gamma_P, Omega, dp.Delta)

    d23 = math.sqrt(3.0 * hbar * q_e**2 * f / (2.0 * m_e * omega))
    E0 = hbar * Omega / d23
    intensity = 2.0 * epsilon_0 * c_light * E0**2
    w_beam = dp.beam_diameter / 2.0
    power = intensity * math.pi * w_beam**2 / 2.0

    flags = []
    if dp.Omega_over_Delta_sq > 1e-2:
        flags.append("(Omega/Delta)^2 not small: Raman elimination marginal")
    bandwidth = 1.0 / dp.delta
    if dp.kappa + Gamma < 5.0 * bandwidth:
        flags.append("bad-cavity margin below 5x the switching bandwidth")

    return {
        "g2N_s2": g2N,
        "g2N_from_f_s2": g2N_from_f,
        "g2N_source": "input" if dp.g2N is not None else "derived_from_f",
        "Gamma_s": Gamma,
        "kappa_s": dp.kappa,
        "impedance_ratio": Gamma / dp.kappa,
        "Omega_rad_s": Omega,
        "Omega_over_2pi_Hz": Omega / (2.0 * math.pi),
        "gamma_R_s": gamma_R,
        "d23_Cm": d23,
        "E0_V_m": E0,
        "intensity_W_m2": intensity,
        "intensity_W_cm2": intensity * 1e-4,
        "power_W": power,
        "mirror_transmittance_ring": 2.0 * dp.kappa * dp.Lz / c_light,
        "mirror_transmittance_standing": 4.0 * dp.kappa * dp.Lz / c_light,
        "flags": flags,
    }
