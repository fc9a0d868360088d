import json
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sigstruct import BinaryStructure, StateSpace

settings.register_profile('default', max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')

MODELS = os.path.join(os.path.dirname(__file__), '..', 'demos', 'models')


def model_path(name):
    return os.path.abspath(os.path.join(MODELS, name))


@pytest.fixture
def three_state():
    """Two measured states, one hidden state shared by both Q links."""
    with open(model_path('three_state.json')) as fh:
        d = json.load(fh)
    return StateSpace(d['A'], d['B'], d['C'])


@pytest.fixture
def crossed():
    """Mode 3 reachable only from u1 and visible only at y2."""
    with open(model_path('crossed_mode.json')) as fh:
        d = json.load(fh)
    return StateSpace(d['A'], d['B'], d['C'])


@pytest.fixture
def diag2():
    return BinaryStructure.diagonal(2)


@pytest.fixture
def diag2_cross():
    return BinaryStructure(np.zeros((2, 2), bool), [[1, 1], [0, 1]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
