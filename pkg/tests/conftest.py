import numpy as np
import pytest

from collab_bandit.core import Instance


@pytest.fixture
def i1_plus():
    return Instance.bernoulli([0.75, 0.25], "I1+")


@pytest.fixture
def i1_minus():
    return Instance.bernoulli([0.25, 0.75], "I1-")


def hard_means(level, sign, beta=4.0):
    off = 1.0 / beta**level
    return np.array([0.5 + sign * off, 0.5 - sign * off])


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
