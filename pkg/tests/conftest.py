import numpy as np
import pytest

ACCEPTANCE_LINES: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def record():
    def _record(line):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
