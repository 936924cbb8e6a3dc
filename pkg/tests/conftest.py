import numpy as np
import pytest

from gcvsa.core import GridConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cfg():
    return GridConfig()


@pytest.fixture(scope="session")
def tiny():
    # one module: fast, and convenient for shift-theorem checks
    return GridConfig(n_s=1, n_theta=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    def add(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
