import numpy as np
import pytest

from src.graphs import complete, cycle, disjoint_union


@pytest.fixture
def c6():
    return cycle(6)


@pytest.fixture
def two_triangles():
    return disjoint_union(cycle(3), cycle(3))


@pytest.fixture
def k4():
    return complete(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
