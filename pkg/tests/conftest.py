import numpy as np
import pytest

from song import HyperParams, SongModel

# pass/fail lines recorded by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_model(C, Y, E=None, G=None, **hyper):
    """A model with hand-placed state; ``hyper`` overrides defaults."""
    C = np.asarray(C, dtype=float)
    Y = np.asarray(Y, dtype=float)
    hp = HyperParams(**hyper).resolved(Y.shape[1])
    return SongModel(C.shape[1], Y.shape[1], hp, C, Y, E, G)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
