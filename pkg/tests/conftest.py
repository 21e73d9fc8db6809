import numpy as np
import pytest

from pns_lab.distributions import ChannelParams
from pns_lab.errors import FullBlockingRegimeError
from pns_lab.matching import b_match


def _matchable(params):
    try:
        b_match(params)
    except FullBlockingRegimeError:
        return False
    return True


def valid_grid(steps=50, eta_max=1.0):
    """Grid points over (0, 1] x (0, eta_max] where the vacuum can be matched."""
    mus = np.linspace(1.0 / steps, 1.0, steps)
    etas = np.linspace(eta_max / steps, eta_max, steps)
    points = (ChannelParams(float(mu), float(eta)) for mu in mus for eta in etas)
    return [p for p in points if _matchable(p)]


@pytest.fixture(scope="session")
def grid_points():
    return valid_grid()


@pytest.fixture(scope="session")
def induction_grid():
    return valid_grid(eta_max=0.75)


ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
