import numpy as np
import pytest

import qwmix as q
from qwmix import cascade


def fig2_params(drive_ratio):
    """Strong-drive comparison point: gamma_s/gamma_pr = 10, delta_omega = 2 pi / 100."""
    return q.validate(q.SystemParams(
        gamma_s=10.0,
        omega_rabi_s=drive_ratio * 10.0,
        omega_rabi_pr=0.2,
        delta_omega=2.0 * np.pi / 100.0,
        mu=1.0,
    ))


@pytest.fixture(scope="session")
def fig2c_steady():
    """Periodic steady state at the strongest drive point (shared: it is the
    expensive run behind the selection-rule and comparison criteria)."""
    return cascade.steady_periodic(fig2_params(500.0))
