import pytest

from uphill.instanton import compute_instanton
from uphill.model import ModelParams
from uphill.stationary import solve_stationary


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def inst_kappa():
    return compute_instanton(2.0, 0.1, 0.05)


@pytest.fixture(scope="session")
def inst_zero():
    return compute_instanton(2.0, 0.0, 0.05)


@pytest.fixture(scope="session")
def solution(params, inst_kappa):
    return solve_stationary(params, dx=0.05, instanton=inst_kappa)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
