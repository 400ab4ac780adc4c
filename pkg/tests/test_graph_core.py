import numpy as np
import pytest

from graph.core import NormalizationMode, build_graph, homophily_ratio, normalize, spmm
from helper import (
    DimensionMismatch,
    DuplicateEdgeConflict,
    EmptyEdgeSet,
    IndexOutOfRange,
    IsolatedNodeInPlainMode,
    NonFiniteInput,
    SelfLoopRejected,
)
from rails.output import random_graph


class TestBuildGraph:

    def test_single_edge(self, k2):
        assert k2.n == 2
        np.testing.assert_array_equal(k2.degrees, [1.0, 1.0])
        assert k2.num_entries == 2
        assert k2.num_edges == 1

    def test_symmetric_pair_deduplicated(self, k2):
        both = build_graph([(0, 1, 1.0), (1, 0, 1.0)], 2)
        np.testing.assert_array_equal(both.indptr, k2.indptr)
        np.testing.assert_array_equal(both.indices, k2.indices)
        np.testing.assert_array_equal(both.weights, k2.weights)

    def test_self_loop_rejected(self):
        with pytest.raises(SelfLoopRejected):
            build_graph([(0, 0, 1.0)], 1)

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            build_graph([(0, 2, 1.0)], 2)

    def test_conflicting_duplicate(self):
        with pytest.raises(DuplicateEdgeConflict):
            build_graph([(0, 1, 1.0), (1, 0, 2.0)], 2)

    def test_invariants_on_random_graph(self, rng):
        g = random_graph(25, rng)
        dense = g.adjacency().toarray()
        np.testing.assert_array_equal(dense, dense.T)
        np.testing.assert_allclose(dense.sum(axis=1), g.degrees)
        assert np.all(np.diag(dense) == 0)
        for row in range(g.n):
            cols = g.indices[g.indptr[row]:g.indptr[row + 1]]
            assert np.all(np.diff(cols) > 0)

    def test_arrays_are_read_only(self, k2):
        with pytest.raises(ValueError):
            k2.weights[0] = 5.0

    def test_empty_edge_list(self):
        g = build_graph([], 3)
        assert g.num_edges == 0
        np.testing.assert_array_equal(g.degrees, np.zeros(3))


class TestNormalize:

    def test_k2_plain(self, k2):
        np.testing.assert_array_equal(normalize(k2, NormalizationMode.PLAIN).to_dense(), [[0, 1], [1, 0]])

    def test_k2_augmented(self, k2):
        np.testing.assert_allclose(normalize(k2).to_dense(), np.full((2, 2), 0.5))

    def test_triangle_plain(self, triangle):
        dense = normalize(triangle, "plain").to_dense()
        np.testing.assert_allclose(dense, (np.ones((3, 3)) - np.eye(3)) / 2)
        assert np.max(np.abs(np.linalg.eigvalsh(dense))) == pytest.approx(1.0, abs=1e-12)

    def test_isolated_node_plain(self):
        g = build_graph([(0, 1, 1.0)], 3)
        with pytest.raises(IsolatedNodeInPlainMode):
            normalize(g, NormalizationMode.PLAIN)
        assert normalize(g).to_dense()[2, 2] == pytest.approx(1.0)

    @pytest.mark.parametrize("mode", ["plain", "augmented"])
    def test_contractive_and_symmetric(self, mode, rng):
        for _ in range(100):
            adj = normalize(random_graph(int(rng.integers(3, 30)), rng), mode)
            dense = adj.to_dense()
            np.testing.assert_allclose(dense, dense.T, atol=1e-15)
            x = rng.standard_normal((adj.n, 3))
            assert np.linalg.norm(spmm(adj, x)) <= np.linalg.norm(x) * (1 + 1e-8)

    def test_weighted_entries(self):
        g = build_graph([(0, 1, 2.0), (1, 2, 1.0)], 3)
        dense = normalize(g, "plain").to_dense()
        assert dense[0, 1] == pytest.approx(2.0 / np.sqrt(2.0 * 3.0))
        assert dense[1, 2] == pytest.approx(1.0 / np.sqrt(3.0 * 1.0))


class TestSpmm:

    def test_swap(self, k2):
        adj = normalize(k2, "plain")
        np.testing.assert_array_equal(spmm(adj, np.eye(2)), [[0, 1], [1, 0]])

    def test_zero_input(self, triangle):
        np.testing.assert_array_equal(spmm(normalize(triangle), np.zeros((3, 4))), np.zeros((3, 4)))

    def test_matches_dense(self, rng):
        for _ in range(20):
            adj = normalize(random_graph(int(rng.integers(3, 65)), rng))
            x = rng.standard_normal((adj.n, 5))
            assert np.linalg.norm(spmm(adj, x) - adj.to_dense() @ x) <= 1e-12

    def test_bit_stable(self, rng):
        adj = normalize(random_graph(40, rng))
        x = rng.standard_normal((40, 6))
        np.testing.assert_array_equal(spmm(adj, x), spmm(adj, x.copy()))

    def test_row_mismatch(self, k2):
        with pytest.raises(DimensionMismatch):
            spmm(normalize(k2), np.ones((3, 1)))

    def test_non_finite(self, k2):
        with pytest.raises(NonFiniteInput):
            spmm(normalize(k2), np.array([[np.nan], [1.0]]))


class TestHomophily:

    def test_uniform_labels(self, triangle):
        assert homophily_ratio(triangle, [1, 1, 1]) == 1.0

    def test_opposite_labels(self, k2):
        assert homophily_ratio(k2, [0, 1]) == 0.0

    def test_path(self, path3):
        assert homophily_ratio(path3, [0, 0, 1]) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(EmptyEdgeSet):
            homophily_ratio(build_graph([], 2), [0, 1])
