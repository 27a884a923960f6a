import math

import numpy as np
import pytest

from isoctl.domain import Circle, discretize, eight_graph
from isoctl.funcspace import WaveFunction
from isoctl.propagator import PropagatorContext


@pytest.fixture(scope="session")
def circle_grid():
    return discretize(Circle(2 * math.pi), nodes_per_edge=512)


@pytest.fixture(scope="session")
def circle_ctx(circle_grid):
    return PropagatorContext.build(circle_grid)


@pytest.fixture(scope="session")
def eight_grid():
    return discretize(eight_graph(), nodes_per_edge=513)


@pytest.fixture(scope="session")
def eight_ctx(eight_grid):
    return PropagatorContext.build(eight_grid)


@pytest.fixture
def flat_circle(circle_grid):
    return WaveFunction(circle_grid, np.full(circle_grid.size, 1 / math.sqrt(2 * math.pi)) + 0j)
