from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging

import numpy as np

from graph.core import NormalizedAdjacency
from helper import CLAMP_HI, CLAMP_LO, DimensionMismatch, UsageError
from residual.strengths import ResidualStrengths, learnable_lambda
from train.config import ResidualStrategy, TrainConfig
from train.tape import Node, Tape

logger = logging.getLogger(__name__)

ModelParams = Dict[str, np.ndarray]


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class ForwardResult:
    logits: np.ndarray
    tape: Tape
    output: Node
    strengths: Optional[ResidualStrengths] = None
    embeddings: List[np.ndarray] = field(default_factory=list)
    # per layer: (Λ𝓐HW, (I - Λ)H0Θ), filled only when audit is requested
    branches: List[tuple] = field(default_factory=list)


class AIRCModel:
    """ Class for an L-layer adaptive IRC network with one shared Λ and a linear classifier head.

        Parameters live in a flat dict: w{l} and theta{l} per layer, w_att for the
        learnable strategy, classifier and bias for the head.
    """

    def __init__(self, config: TrainConfig, in_dim: int, num_classes: int,
                 rng: np.random.Generator, strengths: Optional[ResidualStrengths] = None):
        self.config = config
        self.in_dim = in_dim
        self.num_classes = num_classes
        self.strategy = config.residual_strategy
        needs_fixed = self.strategy in (ResidualStrategy.PAGERANK, ResidualStrategy.STATIC)
        if needs_fixed and strengths is None:
            raise UsageError(f"the {self.strategy.value} strategy needs precomputed residual strengths")
        self.strengths = strengths if needs_fixed else None
        self.params: ModelParams = self._init_params(rng)

    @property
    def uses_residual(self) -> bool:
        return self.strategy is not ResidualStrategy.GCN

    def _init_params(self, rng: np.random.Generator) -> ModelParams:
        hidden = self.config.hidden_dim
        params = {}
        for layer in range(self.config.num_layers):
            fan_in = self.in_dim if layer == 0 else hidden
            params[f"w{layer}"] = glorot_uniform(fan_in, hidden, rng)
            if self.uses_residual:
                params[f"theta{layer}"] = glorot_uniform(self.in_dim, hidden, rng)
        if self.strategy is ResidualStrategy.LEARNABLE:
            params["w_att"] = np.zeros(self.in_dim)
        params["classifier"] = glorot_uniform(hidden, self.num_classes, rng)
        params["bias"] = np.zeros(self.num_classes)
        return params

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def current_strengths(self, h0: np.ndarray) -> Optional[ResidualStrengths]:
        if self.strategy is ResidualStrategy.LEARNABLE:
            return learnable_lambda(h0, self.params["w_att"])
        return self.strengths


def forward_model(model: AIRCModel, adj: NormalizedAdjacency, h0: np.ndarray, training: bool = False,
                  rng: Optional[np.random.Generator] = None, params: Optional[ModelParams] = None,
                  audit: bool = False) -> ForwardResult:
    """
    Records one forward pass on a fresh tape and returns the log-softmax logits.
    Dropout hits every layer input during training; H0 in the residual branch gets its
    own mask. In learnable mode Λ = clip(logistic(H0·w_att)) is recomputed from the undropped H0.
    Args:
        params: overrides model.params (finite-difference probes, best-epoch evaluation)
        audit (bool): keep both pre-activation branches of every layer
    """
    config = model.config
    params = model.params if params is None else params
    if h0.shape[1] != model.in_dim:
        raise DimensionMismatch(f"features have {h0.shape[1]} columns, the model expects {model.in_dim}")

    tape = Tape()
    nodes = {name: tape.parameter(value, name) for name, value in params.items()}
    x = tape.constant(h0, "h0")

    lam = keep = None
    strengths = None
    if model.strategy is ResidualStrategy.LEARNABLE:
        scores = tape.matvec(x, nodes["w_att"])
        lam = tape.clamp(tape.logistic(scores), CLAMP_LO, CLAMP_HI)
        keep = tape.one_minus(lam)
        strengths = learnable_lambda(h0, params["w_att"])
    elif model.uses_residual:
        strengths = model.strengths
        lam = tape.constant(strengths.values, "lambda")
        keep = tape.constant(1.0 - strengths.values, "one_minus_lambda")

    result = ForwardResult(logits=np.empty(0), tape=tape, output=x, strengths=strengths)
    activation, slope = config.activation_kind, config.slope
    h = x
    for layer in range(config.num_layers):
        h_in = tape.dropout(h, config.dropout, rng, training)
        agg = tape.spmm(adj, tape.matmul(h_in, nodes[f"w{layer}"]))
        if model.uses_residual:
            h0_in = tape.dropout(x, config.dropout, rng, training)
            branch = tape.row_scale(lam, agg)
            residual = tape.row_scale(keep, tape.matmul(h0_in, nodes[f"theta{layer}"]))
            if audit:
                result.branches.append((branch.value, residual.value))
            pre = tape.add(branch, residual)
        else:
            pre = agg
        h = tape.activation(pre, activation, slope)
        result.embeddings.append(h.value)

    logits = tape.add_bias(tape.matmul(h, nodes["classifier"]), nodes["bias"])
    result.output = tape.log_softmax(logits)
    result.logits = result.output.value
    return result
