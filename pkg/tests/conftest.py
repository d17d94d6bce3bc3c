import numpy as np
import pytest
from hypothesis import settings

from bcjlsim.protocol import builtin_context

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def toy42():
    return builtin_context("toy42")


@pytest.fixture(scope="session")
def hamming84():
    return builtin_context("hamming84")


@pytest.fixture(scope="session")
def single():
    return builtin_context("single")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
