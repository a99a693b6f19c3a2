import numpy as np
import pytest

from emuinertia import FreqTemplate, LinearCipsModel, droop_model, find_equilibrium, linearize

FIG2 = FreqTemplate((0.0, -2.5, 1.0), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig2():
    return FIG2


@pytest.fixture
def droop_lin():
    nl = droop_model(tau=0.05, K_dr=-20.0, K_ie=-1.0)
    return linearize(nl, find_equilibrium(nl, [0.5]))


@pytest.fixture
def two_state():
    """Fixed 2-state model with a mode slower than most template decays."""
    return LinearCipsModel([[-0.1, 1.0], [0.0, -2.0]], [[0.0], [1.0]], [[1.0], [0.5]],
                           [[1.0, 1.0]], 0.2, 0.1)


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section('acceptance criteria')
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
