import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cstar.algebras import FiniteCStarAlgebra
from cstar.cpmaps import ucp_from_kraus

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit(n, i, j):
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


@pytest.fixture
def m2():
    return FiniteCStarAlgebra((2,))


@pytest.fixture
def identity_channel(m2):
    return ucp_from_kraus(m2, 2, [[np.eye(2)]])


@pytest.fixture
def trace_channel(m2):
    return ucp_from_kraus(m2, 2, [[unit(2, i, j) / np.sqrt(2) for i in range(2) for j in range(2)]])


@pytest.fixture
def trace_state(m2):
    # x -> tr(x)/2 with out_dim 1
    return ucp_from_kraus(m2, 1, [[np.eye(2)[:, [i]] / np.sqrt(2) for i in range(2)]])


@pytest.fixture
def half_half_state():
    return ucp_from_kraus(FiniteCStarAlgebra((1, 1)), 1, [[np.array([[np.sqrt(0.5)]])],
                                                          [np.array([[np.sqrt(0.5)]])]])
