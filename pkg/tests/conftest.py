import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cavraman import ModeIndex, PulseSpec, SystemConfig

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def geom():
    return SystemConfig.dimensionless().geom


@pytest.fixture(scope="session")
def fig2_config():
    """Benchmark operating point: kappa delta = Gamma delta = 4.2, T = 30 delta."""
    return SystemConfig.dimensionless(
        modes=((0, 0),), kappa_delta=4.2, Gamma_delta=4.2, T_over_delta=30.0,
    )


@pytest.fixture(scope="session")
def fig2_pulse():
    return PulseSpec(amplitudes={ModeIndex(0, 0): 1.0 + 0j}, fwhm=1.0, center=-15.0)


@pytest.fixture(scope="session")
def fig2_run(fig2_config, fig2_pulse):
    """Shared benchmark run (backward retrieval)."""
    from cavraman import run_protocol

    return run_protocol(fig2_pulse, fig2_config, "backward")


def l2_relative(a, b, t):
    """Relative L2 distance between two complex series on a common grid."""
    a = np.asarray(a)
    b = np.asarray(b)
    num = np.trapezoid(np.abs(a - b) ** 2, t)
    den = np.trapezoid(np.abs(b) ** 2, t)
    return float(np.sqrt(num / den))
