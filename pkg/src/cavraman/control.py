"""Control-field rotation schedules and the phase-matching bookkeeping.

The control beam propagates at angle theta0 to the cavity axis and its wave
vector is swept through a small angle Dtheta over a duration T at constant
rate.  The sweep defines a switching time delta (time to step the coherence
grating by one longitudinal spin-mode spacing), transverse and longitudinal
grating components q_x(t), q_z(t), and per-mode rephasing offsets.

Time mapping between protocol phases: the storage sweep runs on t in [-T, 0]
with the grating zero anchored at t = 0.  Backward retrieval on [0, T]
reverses the sweep direction (effective time -t), which replays the storage
couplings in reverse order; forward retrieval jumps back to the initial angle
and repeats the sweep (effective time t - T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, NamedTuple

if TYPE_CHECKING:
    from .hg_modes import BeamGeometry, ModeIndex

__all__ = [
    "Phase",
    "RotationSchedule",
    "QVector",
    "switching_time",
    "effective_time",
    "q_transverse",
    "rephasing_offsets",
    "multimode_margin",
]

Phase = Literal["storage", "retrieval_backward", "retrieval_forward"]
_PHASES = ("storage", "retrieval_backward", "retrieval_forward")


class QVector(NamedTuple):
    """Grating wave-vector components at a given time."""

    qx: float
    qz: float


@dataclass(frozen=True)
class RotationSchedule:
    """Constant-rate angular sweep of the control wave vector.

    theta0: mean angle between control beam and cavity axis (rad), in (0, pi).
    Dtheta: total sweep angle (rad).
    T: sweep duration.
    lambda_c: control wavelength.
    phase: which protocol phase the schedule time axis refers to.
    """

    theta0: float
    Dtheta: float
    T: float
    lambda_c: float
    phase: Phase = "storage"

    def __post_init__(self):
        if not 0.0 < self.theta0 < math.pi:
            raise ValueError("theta0 must lie strictly between 0 and pi")
        if self.Dtheta <= 0:
            raise ValueError("Dtheta must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.lambda_c <= 0:
            raise ValueError("lambda_c must be positive")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}")

    @property
    def k_c(self) -> float:
        return 2 * math.pi / self.lambda_c

    @property
    def rate(self) -> float:
        """Angular sweep rate Dtheta / T."""
        return self.Dtheta / self.T


def switching_time(sched: RotationSchedule, Lz: float) -> float:
    """Spin-mode switching time delta = (T/Dtheta) lambda_c / (Lz sin theta0).

    The sweep advances the grating by one longitudinal mode spacing 2 pi / Lz
    every delta; it diverges as theta0 approaches 0 or pi where the sweep has
    no longitudinal component.
    """
    s = math.sin(sched.theta0)
    if s < 1e-12:
        raise ValueError("theta0 = 0 or pi gives no longitudinal grating component")
    return (sched.T / sched.Dtheta) * sched.lambda_c / (Lz * s)


def effective_time(sched: RotationSchedule, t: float) -> float:
    """Map protocol time onto the storage sweep's time axis.

    storage: identity on [-T, 0].  retrieval_backward: -t (reversed sweep,
    last-written spin mode read first).  retrieval_forward: t - T (repeated
    sweep, first-written read first).
    """
    if sched.phase == "storage":
        return t
    if sched.phase == "retrieval_backward":
        return -t
    return t - sched.T


def q_transverse(t: float, sched: RotationSchedule) -> QVector:
    """Grating wave vector q(t) = (k_c cos theta0, 0, -k_c sin theta0) (Dtheta/T) t_eff.

    Returns the transverse component q_x and the longitudinal component q_z at
    the schedule-mapped time.  q_x vanishes identically for theta0 = pi/2.
    """
    t_eff = effective_time(sched, t)
    scale = sched.k_c * sched.rate * t_eff
    return QVector(qx=scale * math.cos(sched.theta0), qz=-scale * math.sin(sched.theta0))


def rephasing_offsets(
    p: int,
    field_idx: "ModeIndex",
    spin_idx: "ModeIndex",
    delta: float,
    geom: "BeamGeometry",
) -> tuple[float, float]:
    """Longitudinal and axial-phase rephasing offsets of the coupling kernel.

    t_p = p delta Lz / L shifts the sinc peak by one slot per longitudinal
    spin index; t_gouy = [(m'-m) + (n'-n)] delta Lz / (2 pi zR) is the small
    extra shift from the mode-order-dependent axial phase.
    """
    t_p = p * delta * geom.Lz / geom.L
    dmn = (spin_idx.m - field_idx.m) + (spin_idx.n - field_idx.n)
    t_gouy = dmn * delta * geom.Lz / (2 * math.pi * geom.zR)
    return t_p, t_gouy


def multimode_margin(
    theta0: float, w0: float, Lz: float, T: float, delta: float, m_max: int
) -> float:
    """Cross-talk safety ratio rho = |tan theta0| / [(pi w0/Lz)(T/delta) sqrt(m_max+1)].

    Transverse modes up to order m_max store in parallel without cross-talk
    when rho >> 1 (satisfied at rho >= 10 for the margins worked in the
    design estimates).  Returns +inf at theta0 = pi/2.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    denom = (math.pi * w0 / Lz) * (T / delta) * math.sqrt(m_max + 1)
    if abs(math.cos(theta0)) < 1e-15:
        return math.inf
    return abs(math.tan(theta0)) / denom
