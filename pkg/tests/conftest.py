import sys
import os
import pytest

# Ensure project root is on the path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import config as settings
from engine.graph import from_edges
from engine.mixture import canonical_labeling, pair_spec


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: acceptance-scale run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session', autouse=True)
def testing_config():
    """Run the suite with the reduced numerical budgets."""
    previous = settings.current()
    settings.use('testing')
    yield settings.current()
    settings._active = previous


@pytest.fixture
def base_spec():
    """Two unit-variance Gaussians on the line, equal weights, means 0 and 5."""
    return pair_spec(0.5, 1.0, 5.0)


@pytest.fixture
def base_labeling(base_spec):
    return canonical_labeling(base_spec, 100)


@pytest.fixture
def triangle_graph():
    """Triangle 0-1-2 with a pendant vertex 3 hanging off 2."""
    return from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (2, 3, 1.0)])


@pytest.fixture
def two_cliques_graph():
    """Two 4-cliques {0..3} and {4..7} joined by a single light edge."""
    edges = [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)]
    edges += [(i, j, 1.0) for i in range(4, 8) for j in range(i + 1, 8)]
    edges.append((3, 4, 0.25))
    return from_edges(8, edges)
