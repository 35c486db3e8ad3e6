import numpy as np
import pytest
from hypothesis import settings

from rydpump.config import load_config

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

# Lines collected by test_acceptance.py, printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fig2_config():
    return load_config("fig2")


@pytest.fixture(scope="session")
def fig3_config():
    return load_config("fig3")
