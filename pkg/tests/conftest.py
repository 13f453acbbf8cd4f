import warnings

import numpy as np
import pytest

from nsmild.errors import BoundaryMassWarning
from nsmild.field_core import GridSpec
from nsmild.mild_solver import SolverConfig, solve_trajectory, taylor_green


def _solve(points, step, final_time, nonlinear=True):
    grid = GridSpec(points)
    with warnings.catch_warnings():
        # Taylor-Green fills the whole periodic box by construction
        warnings.simplefilter("ignore", BoundaryMassWarning)
        return solve_trajectory(taylor_green(grid), SolverConfig(step, final_time, nonlinear=nonlinear))


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tg_traj():
    """Taylor-Green, N = 16, T = 0.5, step 1/64."""
    return _solve(16, 1 / 64, 0.5)


@pytest.fixture(scope="session")
def tg_heat_traj():
    """Same data with the nonlinearity switched off."""
    return _solve(16, 1 / 64, 0.5, nonlinear=False)


@pytest.fixture(scope="session")
def solve():
    return _solve


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
