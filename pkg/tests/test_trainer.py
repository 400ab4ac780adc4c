import math

import numpy as np
import pytest

from database.setup_dataset import sbm_bundle
from graph.core import normalize
from graph.sbm import SbmParams
from helper import EmptyMask, UsageError, make_rng
from model.model import AIRCModel, forward_model
from residual.strengths import Provenance
from train.config import TrainConfig
from train.trainer import (
    METRIC_COLUMNS,
    SUMMARY_COLUMNS,
    accuracy,
    residual_strengths,
    run_seeds,
    summarize,
    train,
)


@pytest.fixture(scope="module")
def small_sbm():
    return sbm_bundle(SbmParams(n=60, p=0.3, q=0.02, seed=3))


class TestAccuracy:

    def test_perfect(self):
        logits = np.eye(3)
        assert accuracy(logits, np.arange(3), np.ones(3, bool)) == 1.0

    def test_ties_pick_class_zero(self):
        assert accuracy(np.zeros((4, 3)), np.array([0, 0, 1, 2]), np.ones(4, bool)) == 0.5

    def test_random_logits(self, rng):
        n = 20000
        score = accuracy(rng.standard_normal((n, 5)), rng.integers(0, 5, n), np.ones(n, bool))
        assert score == pytest.approx(0.2, abs=0.03)

    def test_empty_mask(self):
        with pytest.raises(EmptyMask):
            accuracy(np.eye(2), np.arange(2), np.zeros(2, bool))


class TestModel:

    def test_parameter_layout(self):
        config = TrainConfig(hidden_dim=8, num_layers=3)
        model = AIRCModel(config, 5, 4, make_rng(0))
        assert model.params["w0"].shape == (5, 8)
        assert model.params["w2"].shape == (8, 8)
        assert model.params["theta2"].shape == (5, 8)
        np.testing.assert_array_equal(model.params["w_att"], np.zeros(5))
        gcn = AIRCModel(config.with_overrides(strategy="gcn"), 5, 4, make_rng(0))
        assert "theta0" not in gcn.params and "w_att" not in gcn.params
        assert model.parameter_count() > gcn.parameter_count()

    def test_fixed_strategy_needs_strengths(self):
        with pytest.raises(UsageError):
            AIRCModel(TrainConfig(strategy="pagerank"), 3, 2, make_rng(0))

    def test_inference_is_deterministic(self, small_sbm):
        model = AIRCModel(TrainConfig(hidden_dim=8), small_sbm.feature_dim, 2, make_rng(1))
        adj = normalize(small_sbm.graph)
        a = forward_model(model, adj, small_sbm.features).logits
        b = forward_model(model, adj, small_sbm.features).logits
        np.testing.assert_array_equal(a, b)

    def test_zero_classifier_gives_uniform(self, small_sbm):
        model = AIRCModel(TrainConfig(hidden_dim=4, num_layers=1), small_sbm.feature_dim, 2, make_rng(1))
        model.params["classifier"] = np.zeros_like(model.params["classifier"])
        logits = forward_model(model, normalize(small_sbm.graph), small_sbm.features).logits
        np.testing.assert_allclose(logits, np.full(logits.shape, -math.log(2)))


class TestResidualStrengths:

    def test_by_strategy(self, small_sbm):
        pagerank = residual_strengths(TrainConfig(strategy="pagerank"), small_sbm)
        assert pagerank.provenance is Provenance.PAGERANK
        static = residual_strengths(TrainConfig(strategy="static", beta=0.4), small_sbm)
        assert static.lambda_max == 0.4
        assert residual_strengths(TrainConfig(), small_sbm) is None


class TestTrain:

    def test_zero_epochs(self, small_sbm):
        metrics = train(TrainConfig(epochs=0, hidden_dim=8), small_sbm)
        assert metrics.epochs == [0]
        assert metrics.best_epoch == 0
        assert 0.0 <= metrics.final_test_acc <= 1.0

    def test_metrics_frame(self, small_sbm):
        metrics = train(TrainConfig(epochs=15, hidden_dim=8, log_every=5), small_sbm)
        frame = metrics.to_frame()
        assert list(frame.columns) == METRIC_COLUMNS
        assert frame["epoch"].iloc[0] == 0
        assert [epoch for epoch, _ in metrics.alignment_log] == [0, 5, 10, 15][:len(metrics.alignment_log)]
        assert metrics.lambda_min is not None
        assert metrics.val_acc[metrics.best_epoch] == metrics.best_val_acc

    def test_same_seed_same_run(self, small_sbm):
        config = TrainConfig(epochs=10, hidden_dim=8, strategy="pagerank")
        a, b = train(config, small_sbm), train(config, small_sbm)
        assert a.loss == b.loss
        assert a.final_test_acc == b.final_test_acc

    def test_early_stopping(self, small_sbm):
        metrics = train(TrainConfig(epochs=500, patience=3, hidden_dim=8), small_sbm)
        assert metrics.epochs[-1] < 500

    def test_learns_sbm(self, small_sbm):
        metrics = train(TrainConfig(epochs=200, hidden_dim=16, strategy="pagerank"), small_sbm)
        assert metrics.best_val_acc >= 0.7

    def test_summary(self, small_sbm):
        runs, summary = run_seeds(TrainConfig(epochs=3, hidden_dim=4, strategy="static"), small_sbm,
                                  [0, 1], progress=False)
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert summary["seed"].tolist() == ["0", "1", "mean", "std"]
        assert summary["test_acc"].iloc[2] == pytest.approx(np.mean([r.final_test_acc for r in runs]))
        assert summarize(runs).equals(summary)


@pytest.mark.slow
class TestSbmAcceptance:

    def test_airc_beats_gcn(self):
        bundle = sbm_bundle(SbmParams())
        seeds = list(range(10))
        ours, _ = run_seeds(TrainConfig(strategy="pagerank", num_layers=4), bundle, seeds, progress=False)
        gcn, _ = run_seeds(TrainConfig(strategy="gcn", num_layers=4), bundle, seeds, progress=False)
        ours_mean = np.mean([r.final_test_acc for r in ours])
        gcn_mean = np.mean([r.final_test_acc for r in gcn])
        assert ours_mean >= 0.85
        assert ours_mean - gcn_mean >= 0.02
