import math

import numpy as np
import pytest

from kdvstab.grid import Grid

# filled by test_acceptance.py; echoed once at the end of the session
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def small_grid():
    return Grid(256, 40.0)


@pytest.fixture(scope="session")
def grid_512():
    return Grid(512, 128.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bump(y, center, width):
    """C^infinity bump supported in |y - center| < width."""
    r = np.clip(1 - ((y - center) / width) ** 2, 1e-300, None)
    return np.where(np.abs(y - center) < width, np.exp(-1 / r), 0.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, name, detail = ACCEPTANCE[key]
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  [{key:2d}] {name}: {detail}")
