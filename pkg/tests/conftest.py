import pytest

from qksub.engine import DiffEngine


@pytest.fixture
def dual_engine():
    return DiffEngine("dual")


@pytest.fixture
def fd_engine():
    return DiffEngine("fd", 1e-5)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(LINES):
            terminalreporter.write_line(line)
