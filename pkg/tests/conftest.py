import numpy as np
import pytest

from rotorlab.state import BathParams, PotentialSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bath():
    return BathParams(temperature=2.1, gamma=0.6, inertia=1.3, hbar=0.7)


@pytest.fixture
def tilted():
    return PotentialSpec(((1, 1.2, 0.4), (2, -1.2, 0.3)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
