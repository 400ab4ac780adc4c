import numpy as np
import pytest

from graph.core import normalize
from helper import EmptyMask, TapeConsumed, UsageError, make_rng
from model.model import AIRCModel, forward_model
from rails.output import random_graph
from residual.strengths import static_lambda
from train.config import TrainConfig
from train.tape import Tape

FD_STEP = 1e-5
FD_TOL = 1e-5


def numeric_grad(loss_of, params, name):
    grad = np.zeros_like(params[name])
    for idx in np.ndindex(grad.shape):
        plus = {k: v.copy() for k, v in params.items()}
        minus = {k: v.copy() for k, v in params.items()}
        plus[name][idx] += FD_STEP
        minus[name][idx] -= FD_STEP
        grad[idx] = (loss_of(plus) - loss_of(minus)) / (2 * FD_STEP)
    return grad


class TestTapeOps:

    def test_shared_node_accumulates(self):
        tape = Tape()
        x = tape.parameter(np.array([[2.0]]), "x")
        y = tape.add(x, x)
        grads = tape.backward(y)
        np.testing.assert_array_equal(grads["x"], [[2.0]])

    def test_zero_seed(self):
        tape = Tape()
        a = tape.parameter(np.ones((2, 2)), "a")
        b = tape.parameter(np.ones((2, 3)), "b")
        out = tape.matmul(a, b)
        grads = tape.backward(out, seed=np.zeros((2, 3)))
        assert all(np.all(g == 0) for g in grads.values())

    def test_unreached_parameter_gets_zeros(self):
        tape = Tape()
        a = tape.parameter(np.ones(3), "a")
        tape.parameter(np.ones(2), "unused")
        grads = tape.backward(tape.one_minus(a))
        np.testing.assert_array_equal(grads["unused"], np.zeros(2))
        np.testing.assert_array_equal(grads["a"], -np.ones(3))

    def test_second_backward_raises(self):
        tape = Tape()
        out = tape.logistic(tape.parameter(np.zeros(2), "x"))
        tape.backward(out)
        with pytest.raises(TapeConsumed):
            tape.backward(out)

    def test_ops_recorded_in_order(self):
        tape = Tape()
        x = tape.parameter(np.ones((2, 2)), "x")
        tape.log_softmax(tape.activation(x, "relu"))
        assert tape.ops == ["relu", "log_softmax"]

    def test_constants_not_recorded(self):
        tape = Tape()
        tape.add(tape.constant(np.ones(2)), tape.constant(np.ones(2)))
        assert tape.ops == []

    def test_clamp_blocks_gradient(self):
        tape = Tape()
        x = tape.parameter(np.array([-1.0, 0.5, 2.0]), "x")
        grads = tape.backward(tape.clamp(x, 0.0, 1.0))
        np.testing.assert_array_equal(grads["x"], [0.0, 1.0, 0.0])

    def test_dropout_inference_is_identity(self):
        tape = Tape()
        x = tape.parameter(np.ones((3, 3)), "x")
        assert tape.dropout(x, 0.5, None, training=False) is x
        with pytest.raises(UsageError):
            tape.dropout(x, 0.5, None, training=True)

    def test_empty_mask(self):
        tape = Tape()
        logp = tape.log_softmax(tape.parameter(np.zeros((2, 2)), "x"))
        with pytest.raises(EmptyMask):
            tape.masked_nll(logp, np.array([0, 1]), np.zeros(2, dtype=bool))

    def test_spmm_and_row_scale_against_finite_differences(self, rng):
        adj = normalize(random_graph(6, rng))
        x0 = rng.standard_normal((6, 2))
        s0 = rng.uniform(0.1, 0.9, size=6)

        def loss_of(p):
            return float(np.sum(np.sin(p["s"][:, None] * (adj.to_dense() @ p["x"]))))

        tape = Tape()
        x, s = tape.parameter(x0, "x"), tape.parameter(s0, "s")
        out = tape.row_scale(s, tape.spmm(adj, x))
        grads = tape.backward(out, seed=np.cos(out.value))
        params = {"x": x0, "s": s0}
        for name in params:
            np.testing.assert_allclose(grads[name], numeric_grad(loss_of, params, name), rtol=1e-6, atol=1e-8)


class TestModelGradients:

    @pytest.mark.parametrize("activation", ["relu", "leaky_relu", "sigmoid"])
    @pytest.mark.parametrize("strategy", ["learnable", "pagerank", "static", "gcn"])
    def test_finite_differences_with_dropout(self, strategy, activation):
        rng = make_rng(11)
        graph = random_graph(20, rng)
        adj = normalize(graph)
        h0 = rng.standard_normal((20, 3))
        labels = rng.integers(0, 3, size=20)
        mask = np.zeros(20, dtype=bool)
        mask[:12] = True
        config = TrainConfig(strategy=strategy, hidden_dim=4, num_layers=2, dropout=0.3, activation=activation)
        strengths = static_lambda(0.4, 20) if strategy in ("pagerank", "static") else None
        model = AIRCModel(config, 3, 3, rng, strengths)
        if "w_att" in model.params:
            model.params["w_att"] = 0.5 * rng.standard_normal(3)

        def loss_of(params):
            result = forward_model(model, adj, h0, training=True, rng=make_rng(5), params=params)
            return float(result.tape.masked_nll(result.output, labels, mask).value)

        result = forward_model(model, adj, h0, training=True, rng=make_rng(5))
        grads = result.tape.backward(result.tape.masked_nll(result.output, labels, mask))
        assert set(grads) == set(model.params)
        for name, analytic in grads.items():
            numeric = numeric_grad(loss_of, model.params, name)
            error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-8)
            assert error <= FD_TOL, name
