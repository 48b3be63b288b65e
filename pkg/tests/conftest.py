import math

import pytest

from ddmap.core import KickParams, LogisticParams, kick_strength, default_nu

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def K():
    return kick_strength(15.5, default_nu(15.5))


@pytest.fixture
def kick():
    """Factory: ``kick(1/6)`` -> params with C = 1/(6K)."""
    return KickParams.from_fraction


@pytest.fixture
def logistic():
    return LogisticParams


def rel_err(a, b):
    a, b = float(a), float(b)
    return abs(a - b) if b == 0.0 else abs(a - b) / abs(b)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
