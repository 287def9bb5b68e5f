"""Multimode cavity-assisted Raman memory with angular phase-matching control.

Numerical simulator (simplified and cross-talk models, microscopic oracle)
plus the closed-form toolkit: echo envelopes, diffraction losses, capacity
and physical design estimates.
"""

__version__ = "0.1.0"

from .analytic import (
    CapacityInput,
    DesignPoint,
    capacity_estimate,
    collective_rate,
    design_point,
    diffraction_loss,
    diffraction_loss_pair,
    echo_backward,
    echo_forward,
    gammaR_effective,
    stored_spin_analytic,
)
from .control import QVector, RotationSchedule, multimode_margin, q_transverse, rephasing_offsets, switching_time
from .dynamics import SimState, SystemConfig, input_output, rhs_full, rhs_simplified, step_rk4
from .hg_modes import (
    BeamGeometry,
    ModeIndex,
    QuadratureError,
    alpha_pm,
    coupling_B_factorized,
    coupling_B_numeric,
    displacement_overlap,
    eval_mode,
    overlap_matrix,
    transverse_overlap,
)
from .metrics import fidelity_correlation, find_tbar, photon_number
from .micro import MicroConfig, MicroState, micro_rhs, run_micro_protocol
from .protocol import PulseSpec, SimOutput, make_input, run_protocol, run_retrieval, run_storage
