import numpy as np
import pytest

from energy.bounds import (
    adjacency_sigma_r,
    composed_energy_margin,
    leading_basis,
    propagation_bound_holds,
    sample_in_space,
    singular_lower_bound_checks,
    superadditivity_margin,
    theorem2_bound,
    weight_bound_holds,
)
from graph.core import build_graph, normalize
from graph.sbm import SbmParams, sbm_generate
from helper import DivergentSeries, InvalidLambda, InvalidSlope, UsageError
from rails.output import random_graph


class TestTheorem2Bound:

    def test_arithmetic(self):
        bound = theorem2_bound(alpha=1.0, lambda_min=0.5, lambda_max=0.5, sigma_r_adj=1.0,
                               sigma_bar_w=0.0, sigma_bar_theta=1.0, e0=4.0)
        assert bound.eta == pytest.approx(0.25)
        assert bound.zeta == pytest.approx(0.25)
        assert bound.bound_value == pytest.approx(1.0)

    def test_lambda_max_near_one(self):
        bound = theorem2_bound(0.5, 0.1, 1 - 1e-9, 1.0, 1.0, 1.0, 10.0)
        assert bound.bound_value < 1e-15

    def test_value_at_depth_converges(self):
        bound = theorem2_bound(0.8, 0.5, 0.6, 0.9, 1.0, 1.0, 3.0)
        assert bound.value_at_depth(0) == pytest.approx(3.0)
        assert bound.value_at_depth(500) == pytest.approx(bound.bound_value)

    def test_value_at_depth_without_contraction(self):
        bound = theorem2_bound(1.0, 0.5, 0.5, 1.0, 0.0, 1.0, 4.0)
        assert bound.value_at_depth(3) == pytest.approx(1.0)

    @pytest.mark.parametrize("kwargs, error", [
        ({"alpha": 0.0}, InvalidSlope),
        ({"alpha": 1.5}, InvalidSlope),
        ({"lambda_min": 0.0}, InvalidLambda),
        ({"lambda_min": 0.6, "lambda_max": 0.5}, InvalidLambda),
        ({"lambda_max": 1.0}, InvalidLambda),
        ({"sigma_r_adj": 0.0}, UsageError),
        ({"lambda_min": 0.9, "lambda_max": 0.9, "sigma_bar_w": 2.0}, DivergentSeries),
    ])
    def test_invalid(self, kwargs, error):
        args = dict(alpha=1.0, lambda_min=0.5, lambda_max=0.5, sigma_r_adj=1.0,
                    sigma_bar_w=1.0, sigma_bar_theta=1.0, e0=1.0)
        args.update(kwargs)
        with pytest.raises(error):
            theorem2_bound(**args)


class TestNormBounds:

    def test_weight_equality_boundary(self):
        w = np.diag([1.0, 0.0])
        assert weight_bound_holds(w, np.array([2.0, 0.0]))

    def test_counterexample(self):
        assert not weight_bound_holds(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([0.0, 1.0]))

    def test_random_weights_in_space(self, rng):
        for _ in range(100):
            w = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
            basis, _ = leading_basis(w)
            assert weight_bound_holds(w, sample_in_space(basis, rng))

    def test_propagation_in_space(self, rng):
        for _ in range(50):
            adj = normalize(random_graph(int(rng.integers(3, 20)), rng))
            basis, sigma_r = leading_basis(adj.to_dense())
            lam = rng.uniform(0.1, 0.9, size=adj.n)
            assert propagation_bound_holds(adj, lam, sample_in_space(basis, rng), sigma_r)

    def test_checks_dispatch(self, triangle, rng):
        adj = normalize(triangle)
        checks = singular_lower_bound_checks(np.ones(3), w=np.eye(3), adj=adj, lam=np.full(3, 0.5))
        assert set(checks) == {"weight", "propagation"}
        with pytest.raises(UsageError):
            singular_lower_bound_checks(np.ones(3))

    def test_sample_columns(self, rng):
        basis = np.eye(4)[:, :2]
        sample = sample_in_space(basis, rng, columns=3)
        assert sample.shape == (4, 3)
        np.testing.assert_array_equal(sample[2:], 0.0)


class TestSigmaR:

    def test_dense_path(self, triangle):
        sigma, estimated = adjacency_sigma_r(normalize(triangle, "plain"))
        assert not estimated
        assert sigma == pytest.approx(0.5)

    @pytest.mark.slow
    def test_iterative_path(self, rng):
        adj = normalize(random_graph(600, rng))
        sigma, estimated = adjacency_sigma_r(adj)
        assert estimated
        expected = np.min(np.abs(np.linalg.eigvalsh(adj.to_dense())))
        assert sigma == pytest.approx(expected, rel=1e-6)

    @staticmethod
    def _dense_sigma_r(adj):
        sigma = np.linalg.svd(adj.to_dense(), compute_uv=False)
        return sigma[sigma > 1e-9 * sigma[0]].min()

    def test_large_null_space_star(self):
        n = 600
        star = build_graph([(0, i, 1.0) for i in range(1, n)], n)
        adj = normalize(star, "plain")
        sigma, _ = adjacency_sigma_r(adj)
        assert sigma == pytest.approx(self._dense_sigma_r(adj), rel=1e-9)
        assert sigma == pytest.approx(1.0)

    def test_large_null_space_cliques(self):
        graph, _, _ = sbm_generate(SbmParams(n=600, p=1.0, q=0.0))
        adj = normalize(graph)
        sigma, _ = adjacency_sigma_r(adj)
        assert sigma == pytest.approx(self._dense_sigma_r(adj), rel=1e-9)


class TestEnergyMargins:

    def test_composed_static(self, rng):
        for _ in range(50):
            adj = normalize(random_graph(int(rng.integers(4, 20)), rng))
            adj_basis, sigma_r = leading_basis(adj.to_dense())
            w = rng.standard_normal((3, 3))
            w_basis, _ = leading_basis(w)
            x = adj_basis @ adj_basis.T @ rng.standard_normal((adj.n, 3)) @ w_basis @ w_basis.T
            lam = np.full(adj.n, rng.uniform(0.1, 0.9))
            assert composed_energy_margin(adj, lam, x, w, sigma_r) >= -1e-10

    def test_superadditivity(self, rng):
        adj = normalize(random_graph(12, rng))
        for _ in range(50):
            x, y = rng.standard_normal((12, 2)), rng.standard_normal((12, 2))
            alignment, margin = superadditivity_margin(adj, x, y)
            if alignment >= 0:
                assert margin >= -1e-10
