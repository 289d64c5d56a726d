import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shadowtomo.rng import make_rng

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return make_rng(1234, "tests")


def dense_close(a, b, tol=1e-9):
    return float(np.abs(np.asarray(a) - np.asarray(b)).max()) <= tol


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
