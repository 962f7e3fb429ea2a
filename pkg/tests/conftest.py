"""
Shared pytest configuration for the BlindDPS tests.

Long desk-scale experiments are marked `slow` and only run with --runslow.
"""

import os
import sys

import numpy as np
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.blinddps.diffusion import default_schedule, make_schedule


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='Run slow acceptance experiments')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale acceptance experiment (needs --runslow)')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def sched():
    """Default 1000-step schedule."""
    return make_schedule()


@pytest.fixture
def short_sched():
    """Rescaled 50-step schedule for fast sampler tests."""
    return default_schedule(50)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
