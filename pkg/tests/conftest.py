import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twophoton.model import SystemParams, eigenfrequencies  # noqa: E402


@pytest.fixture
def weak():
    return SystemParams(g=1.0, kappa=5.0)


@pytest.fixture
def strong():
    return SystemParams(g=1.0, kappa=0.5)


@pytest.fixture
def lossy():
    return SystemParams(g=1.0, kappa=5.0, gamma=0.3, omega_a=0.2)


@pytest.fixture
def lossy_es(lossy):
    return eigenfrequencies(lossy)


#: criterion number -> "PASS/FAIL ..." line, filled by test_acceptance
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
