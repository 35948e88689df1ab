import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pfloc", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pfloc")

ACCEPTANCE_LINES: list = []


def random_skew(rng, m):
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return np.triu(z, 1) - np.triu(z, 1).T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
