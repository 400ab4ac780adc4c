import numpy as np
import pytest

from graph.core import build_graph
from helper import ConvergenceFailure, InvalidTolerance, UsageError
from rails.output import random_graph
from residual.pagerank import pagerank


def dense_pagerank(graph, damping):
    adj = graph.adjacency().toarray()
    transition = adj / graph.degrees[None, :]
    n = graph.n
    return np.linalg.solve(np.eye(n) - damping * transition, np.full(n, (1 - damping) / n))


class TestPageRank:

    def test_triangle_uniform(self, triangle):
        np.testing.assert_allclose(pagerank(triangle, 0.85).scores, np.full(3, 1 / 3), atol=1e-10)

    @pytest.mark.parametrize("damping", [0.5, 0.85, 0.99])
    def test_k2_uniform(self, k2, damping):
        np.testing.assert_allclose(pagerank(k2, damping).scores, [0.5, 0.5], atol=1e-9)

    def test_path_against_dense_solve(self, path3):
        result = pagerank(path3, 0.85)
        np.testing.assert_allclose(result.scores, dense_pagerank(path3, 0.85), atol=1e-8)
        assert result.scores[1] > result.scores[0]
        assert result.scores[0] == pytest.approx(result.scores[2])

    def test_weighted_graph(self, rng):
        g = random_graph(30, rng)
        np.testing.assert_allclose(pagerank(g).scores, dense_pagerank(g, 0.85), atol=1e-8)

    def test_sums_to_one_with_isolated_node(self):
        g = build_graph([(0, 1, 1.0), (1, 2, 1.0)], 5)
        result = pagerank(g)
        assert result.scores.sum() == pytest.approx(1.0)
        assert result.scores[3] == pytest.approx(result.scores[4])

    def test_reports_iterations(self, path3):
        result = pagerank(path3)
        assert result.iterations_used >= 1
        assert result.residual <= 1e-10

    @pytest.mark.parametrize("damping", [0.0, 1.0])
    def test_invalid_damping(self, k2, damping):
        with pytest.raises(UsageError):
            pagerank(k2, damping)

    def test_invalid_tolerance(self, k2):
        with pytest.raises(InvalidTolerance):
            pagerank(k2, tol=0.0)

    def test_iteration_cap(self, path3):
        with pytest.raises(ConvergenceFailure):
            pagerank(path3, tol=1e-15, max_iter=2)
