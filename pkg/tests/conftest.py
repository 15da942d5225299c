import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from carnot_heat.group_core import get_group

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def heis():
    return get_group("heis")


@pytest.fixture
def r1():
    return get_group("r1")


@pytest.fixture
def r2():
    return get_group("r2")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
