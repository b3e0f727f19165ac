from __future__ import annotations

import pytest

from wormproj.geometry import WormParams
from wormproj.numerics import GridSpec

SMALL_GRID = GridSpec(x_max=10.0, x_nodes=8, u_panels=4, u_nodes=8, s_nodes=10, n_theta=4)

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def params():
    return WormParams(2.0)


@pytest.fixture(scope="session")
def params_wide():
    return WormParams(5.5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
