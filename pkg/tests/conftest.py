import numpy as np
import pytest

from graph.core import build_graph
from helper import make_rng
from rails.output import random_graph


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def k2():
    return build_graph([(0, 1, 1.0)], 2)


@pytest.fixture
def triangle():
    return build_graph([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3)


@pytest.fixture
def path3():
    return build_graph([(0, 1, 1.0), (1, 2, 1.0)], 3)


@pytest.fixture
def random_graphs(rng):
    return [random_graph(int(rng.integers(4, 30)), rng) for _ in range(10)]


def dense_adjacency(graph) -> np.ndarray:
    return graph.adjacency().toarray()
