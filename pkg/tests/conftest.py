import math

import numpy as np
import pytest
import scipy.linalg as sla

from kirp.bch import density_to_ring_operator
from kirp.model import ModelParams


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params045():
    return ModelParams(tau=0.45, hx=0.9, hz=0.8)


@pytest.fixture(scope="session")
def params065():
    return ModelParams(tau=0.65, hx=0.9, hz=0.8)


@pytest.fixture(scope="session")
def params075():
    return ModelParams(tau=0.75, hx=0.9, hz=0.8)


def dense_floquet_ring(p: ModelParams, L: int) -> np.ndarray:
    """One-step unitary U_x U_z on a periodic ring (independent oracle)."""
    hx_op = density_to_ring_operator({(1,): 1.0}, L)
    hz_op = density_to_ring_operator({(3, 3): 1.0}, L) + p.hz * density_to_ring_operator({(3,): 1.0}, L)
    ux = sla.expm(1j * p.tau * p.hx * hx_op)
    uz = sla.expm(1j * p.tau * hz_op)
    return ux @ uz
