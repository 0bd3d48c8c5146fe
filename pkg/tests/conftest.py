import numpy as np
import pytest

from fvkernel.fock import BathSpec, random_bath

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def bath2():
    """Two fermion modes, E = (1, 2), g_12 = 0.1, beta = 1."""
    return BathSpec([1.0, 2.0], [[0.0, 0.1], [-0.1, 0.0]], 1.0)


@pytest.fixture
def bath4(rng):
    return random_bath(rng, 4, beta=1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
