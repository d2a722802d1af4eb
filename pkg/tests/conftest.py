import numpy as np
import pytest

from smac_rl.numcore import make_rng

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return make_rng(1234)


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.linalg.norm(b), np.linalg.norm(a), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
