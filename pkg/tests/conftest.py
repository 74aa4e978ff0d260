import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def write_text(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
