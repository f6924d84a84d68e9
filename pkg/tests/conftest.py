import sys

import numpy as np
import pytest

from l1discovery import QuadraticProblem


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def identity_problem():
    return QuadraticProblem(np.eye(2), np.array([3.0, 1.0]))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
