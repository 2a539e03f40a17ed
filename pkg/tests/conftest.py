import pytest

from touchdown.grid import build_grid, interval, radial_ball
from touchdown.profiles import constant, make_m_shaped, make_two_bump
from touchdown.solver import SolverConfig, solve


@pytest.fixture(scope="session")
def const10_run():
    """f = 10 on (-1, 1), p = 2: the reference quenching run."""
    g = build_grid(interval(1.0), 800)
    return solve(g, constant(g, 10.0), SolverConfig(p=2.0))


@pytest.fixture(scope="session")
def two_bump_run():
    g = build_grid(radial_ball(1.0, 1), 800)
    return solve(g, make_two_bump(g, 0.5, 0.2, 40.0, 0.05), SolverConfig(p=2.0))


@pytest.fixture(scope="session")
def m_shaped_run():
    g = build_grid(interval(1.0), 800)
    return solve(g, make_m_shaped(g, 0.01, 30.0, 0.28), SolverConfig(p=2.0, snapshot_stride=1))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
