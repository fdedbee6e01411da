import numpy as np
import pytest

from heig import ExampleId, discretize, example_problem

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def ex1():
    return example_problem(ExampleId.EXAMPLE1_MIXED)


@pytest.fixture(scope="session")
def ex2():
    return example_problem(ExampleId.EXAMPLE2_DIRICHLET)


@pytest.fixture(scope="session")
def op1(ex1):
    return discretize(ex1, 256)


@pytest.fixture(scope="session")
def op2(ex2):
    return discretize(ex2, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
