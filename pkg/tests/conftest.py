import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from xlmimo_sim.spectral_efficiency import build_scenario

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DESK = dict(n_h_r=4, n_v_r=4, delta_r=1 / 3, n_h_s=2, n_v_s=2, delta_s=1 / 3)


@pytest.fixture(scope="session")
def desk_scenario():
    """M=4, K=3, 4x4 BS surfaces and 2x2 UE surfaces at lambda/3, 10 dB."""
    return build_scenario(4, 3, **DESK)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from acceptance_registry import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
