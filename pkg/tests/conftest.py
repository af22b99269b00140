import numpy as np
import pytest

from tfdlab.core import CoefficientField, make_uniform_grid


def field(func, grid, label="p"):
    return CoefficientField.from_function(func, grid, label)


def const(value, grid, label="p"):
    return CoefficientField.constant(value, grid, label)


@pytest.fixture
def unit_grid():
    return make_uniform_grid(1.0, 100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
