import numpy as np
import pytest

from spheretrack.sim import SimConfig, run_simulation

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


@pytest.fixture(scope="session")
def fig1_fine():
    """Figure-1 run sampled at every step (dt = 1e-3, t in [0, 200])."""
    return run_simulation(SimConfig.for_figure("1", record_every=1))


@pytest.fixture(scope="session")
def fig3_run():
    return run_simulation(SimConfig.for_figure("3"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=int):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
