from __future__ import annotations

import numpy as np
import pytest

from harvestbif.continuation import find_delta, trace_branch
from harvestbif.model import make_problem

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def problem():
    return make_problem()


@pytest.fixture(scope="session")
def problem_m0():
    return make_problem(M=0.0)


@pytest.fixture(scope="session")
def small_problem():
    return make_problem(n=31)


@pytest.fixture(scope="session")
def branch_mid(problem):
    return trace_branch(problem, problem.a_from_rel(0.5))


@pytest.fixture(scope="session")
def branch_lambda2(problem):
    return trace_branch(problem, problem.lam2)


@pytest.fixture(scope="session")
def delta_branch(problem):
    return find_delta(problem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
