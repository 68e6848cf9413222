import numpy as np
import pytest

from gmult.gframe import GFrame

SQ3 = np.sqrt(3.0) / 2.0


def onb2() -> GFrame:
    return GFrame((np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])))


def merc() -> GFrame:
    return GFrame(
        (
            np.array([[1.0, 0.0]]),
            np.array([[-0.5, SQ3]]),
            np.array([[-0.5, -SQ3]]),
        )
    )


def diag3() -> GFrame:
    return GFrame(
        (
            np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        )
    )


@pytest.fixture
def ONB2():
    return onb2()


@pytest.fixture
def MERC():
    return merc()


@pytest.fixture
def DIAG3():
    return diag3()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
