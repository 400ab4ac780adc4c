import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from helper import (
    CLAMP_HI,
    DimensionMismatch,
    InvalidBeta,
    InvalidFraction,
    InvalidLambda,
    InvalidLambdaOrder,
)
from residual.pagerank import PageRankScores
from residual.strengths import (
    Provenance,
    ResidualStrengths,
    centrality_correlation,
    learnable_lambda,
    pagerank_lambda,
    static_lambda,
)


def scores_of(values):
    return PageRankScores(scores=np.asarray(values, dtype=float), damping=0.85, iterations_used=1, residual=0.0)


class TestLearnableLambda:

    def test_zero_attention(self, rng):
        strengths = learnable_lambda(rng.standard_normal((5, 3)), np.zeros(3))
        np.testing.assert_array_equal(strengths.values, np.full(5, 0.5))
        assert strengths.provenance is Provenance.LEARNABLE

    def test_saturation_clamped(self):
        strengths = learnable_lambda(np.array([[40.0]]), np.array([1.0]))
        assert strengths.values[0] == CLAMP_HI

    def test_scalar_oracle(self, rng):
        h0, w = rng.standard_normal((10, 4)), rng.standard_normal(4)
        expected = [1.0 / (1.0 + math.exp(-float(row @ w))) for row in h0]
        np.testing.assert_allclose(learnable_lambda(h0, w).values, expected, atol=1e-14)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            learnable_lambda(rng.standard_normal((4, 3)), np.zeros(2))


class TestPageRankLambda:

    def test_single_top_node(self):
        values = np.arange(10, dtype=float)
        strengths = pagerank_lambda(scores_of(values), 0.1, 0.7, 0.3)
        assert strengths.values[9] == 0.7
        assert np.sum(strengths.values == 0.7) == 1

    def test_tie_goes_to_lowest_index(self):
        strengths = pagerank_lambda(scores_of(np.ones(10)), 0.1, 0.7, 0.3)
        assert strengths.values[0] == 0.7
        assert np.sum(strengths.values == 0.7) == 1

    def test_cora_count(self):
        strengths = pagerank_lambda(scores_of(np.linspace(0, 1, 2708)), 0.1, 0.7, 0.3)
        assert np.sum(strengths.values == 0.7) == 271
        assert np.sum(strengths.values == 0.3) == 2437

    def test_bounds(self):
        strengths = pagerank_lambda(scores_of(np.arange(20.0)), 0.25, 0.8, 0.1)
        assert strengths.lambda_min == 0.1
        assert strengths.lambda_max == 0.8
        assert strengths.provenance is Provenance.PAGERANK

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_invalid_fraction(self, fraction):
        with pytest.raises(InvalidFraction):
            pagerank_lambda(scores_of(np.ones(5)), fraction, 0.7, 0.3)

    def test_invalid_order(self):
        with pytest.raises(InvalidLambdaOrder):
            pagerank_lambda(scores_of(np.ones(5)), 0.1, 0.3, 0.7)


class TestStaticLambda:

    def test_values(self):
        strengths = static_lambda(0.5, 3)
        np.testing.assert_array_equal(strengths.values, [0.5, 0.5, 0.5])
        assert strengths.lambda_min == strengths.lambda_max == 0.5

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_invalid(self, beta):
        with pytest.raises(InvalidBeta):
            static_lambda(beta, 3)


class TestResidualStrengths:

    def test_rejects_values_outside_clamp(self):
        with pytest.raises(InvalidLambda):
            ResidualStrengths(values=np.array([1.0]), provenance=Provenance.STATIC)

    def test_read_only(self):
        strengths = static_lambda(0.5, 2)
        with pytest.raises(ValueError):
            strengths.values[0] = 0.1

    def test_csv(self, tmp_path):
        path = static_lambda(0.25, 2).to_csv(tmp_path / "lambda.csv")
        assert path.read_text() == "node,lambda\n0,0.25\n1,0.25\n"


class TestCentralityCorrelation:

    def test_matches_scipy(self, rng):
        strengths = learnable_lambda(rng.standard_normal((12, 2)), rng.standard_normal(2))
        scores = scores_of(rng.random(12))
        expected = spearmanr(strengths.values, scores.scores).statistic
        assert centrality_correlation(strengths, scores) == pytest.approx(expected)

    def test_constant_is_nan(self):
        assert math.isnan(centrality_correlation(static_lambda(0.5, 4), scores_of([0.1, 0.2, 0.3, 0.4])))
