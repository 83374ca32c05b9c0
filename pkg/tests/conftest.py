import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from magbloch.lattice import Lattice, make_flux  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def square():
    return Lattice.square()


@pytest.fixture
def triangular():
    return Lattice.triangular()


@pytest.fixture
def unit_flux(square):
    return make_flux(1, 1, square)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
