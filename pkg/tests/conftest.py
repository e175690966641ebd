import pytest

from mlcontracts.model import ProblemParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def baseline():
    return ProblemParams(theta=0.0, d=0.01, p=1.0, alpha=1e-4, beta=1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
