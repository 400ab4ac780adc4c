"""
Forward dynamics: the simplified linear propagation H <- Λ𝓐H + (I - Λ)H0, its
limit, and the full adaptive IRC layer σ(Λ𝓐HW + (I - Λ)H0Θ).
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy.special import expit

from graph.core import NormalizedAdjacency, spmm
from guards.input import as_matrix, check_inner, check_rows, check_same_shape
from helper import (
    DEFAULT_REL_TOL,
    DEFAULT_SLOPE,
    ConvergenceFailure,
    DimensionMismatch,
    InvalidLambda,
    InvalidSlope,
    NonContractive,
)
from linalg.dense import numerical_rank
from linalg.solve import lambda_values

logger = logging.getLogger(__name__)

LIMIT_MAX_STEPS = 100_000
LIMIT_TOL = 1e-10


class Activation(Enum):
    LEAKY_RELU = "leaky_relu"
    RELU = "relu"
    IDENTITY = "identity"
    SIGMOID = "sigmoid"


def apply_activation(x: np.ndarray, activation=Activation.RELU, slope: float = DEFAULT_SLOPE) -> np.ndarray:
    activation = Activation(activation)
    if activation is Activation.LEAKY_RELU:
        if not 0.0 < slope < 1.0:
            raise InvalidSlope(f"leaky ReLU slope must lie in (0, 1), got {slope}")
        return np.where(x > 0, x, slope * x)
    if activation is Activation.RELU:
        return np.maximum(x, 0.0)
    if activation is Activation.SIGMOID:
        return expit(x)
    return x


def activation_slope(activation, slope: float = DEFAULT_SLOPE) -> Optional[float]:
    """Energy contraction factor of the activation, or None when no bound is known."""
    activation = Activation(activation)
    if activation is Activation.LEAKY_RELU:
        return slope
    if activation is Activation.IDENTITY:
        return 1.0
    return None


@dataclass
class LayerParams:
    """W maps d_l -> d_(l+1); Θ always maps from the input dimension d_0."""
    w: np.ndarray
    theta: Optional[np.ndarray] = None

    def __post_init__(self):
        self.w = as_matrix(self.w, "w")
        if self.theta is not None:
            self.theta = as_matrix(self.theta, "theta")
            if self.theta.shape[1] != self.w.shape[1]:
                raise DimensionMismatch(
                    f"w maps to {self.w.shape[1]} channels but theta maps to {self.theta.shape[1]}"
                )

    @property
    def in_dim(self) -> int:
        return self.w.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w.shape[1]


def _contractive(lam, n: int, allow_zero: bool) -> np.ndarray:
    values = lambda_values(lam, n)
    if np.any(values >= 1.0):
        raise NonContractive(f"λ_i must be < 1, got max {values.max()!r}")
    floor_ok = values >= 0.0 if allow_zero else values > 0.0
    if not np.all(floor_ok):
        raise InvalidLambda(f"λ_i must be {'>= 0' if allow_zero else '> 0'}, got min {values.min()!r}")
    return values[:, None]


def simplified_step(lam, adj: NormalizedAdjacency, h_l, h0) -> np.ndarray:
    """
    One step of Λ𝓐H + (I - Λ)H0. ResidualStrengths are already inside (0, 1);
    a raw vector may also hold exact zeros.
    """
    h_l = as_matrix(h_l, "h_l")
    h0 = as_matrix(h0, "h0")
    check_rows(h_l, adj.n, "h_l")
    check_same_shape(h_l, h0, ("h_l", "h0"))
    scale = _contractive(lam, adj.n, allow_zero=True)
    return scale * spmm(adj, h_l) + (1.0 - scale) * h0


def simplified_limit(lam, adj: NormalizedAdjacency, h0, max_steps: int = LIMIT_MAX_STEPS,
                     tol: float = LIMIT_TOL, rank_every: int = 0,
                     rel_tol: float = DEFAULT_REL_TOL) -> Tuple[np.ndarray, int, List[int]]:
    """
    Iterates simplified_step from H0 until ||ΔH||_F <= tol·(1 - λ_max)·||H||_F, which keeps
    the distance to the closed-form limit below tol·||H||_F.
    Args:
        rank_every (int): record numerical_rank of H0, of every rank_every-th iterate and
            of the limit; 0 records nothing
    Returns:
        (limit, steps_used, ranks)
    """
    h0 = as_matrix(h0, "h0")
    check_rows(h0, adj.n, "h0")
    scale = _contractive(lam, adj.n, allow_zero=True)
    threshold = tol * (1.0 - float(scale.max()))
    rhs = (1.0 - scale) * h0
    ranks = [numerical_rank(h0, rel_tol)] if rank_every else []

    h = h0
    for step in range(1, max_steps + 1):
        nxt = scale * spmm(adj, h) + rhs
        delta = np.linalg.norm(nxt - h)
        h = nxt
        done = delta <= threshold * np.linalg.norm(h)
        if rank_every and (done or step % rank_every == 0):
            ranks.append(numerical_rank(h, rel_tol))
        if done:
            return h, step, ranks
    raise ConvergenceFailure(f"simplified propagation did not settle in {max_steps} steps")


def airc_layer_forward(lam, adj: NormalizedAdjacency, h_l, h0, params: LayerParams,
                       activation=Activation.RELU, slope: float = DEFAULT_SLOPE,
                       exact_gcn: bool = False) -> np.ndarray:
    """
    σ(Λ𝓐HW + (I - Λ)H0Θ), with Λ applied as a row scaling.
    exact_gcn skips the residual branch entirely: σ(𝓐HW).
    """
    h_l = as_matrix(h_l, "h_l")
    check_rows(h_l, adj.n, "h_l")
    check_inner(h_l, params.w, ("h_l", "w"))
    agg = spmm(adj, h_l @ params.w)
    if exact_gcn:
        return apply_activation(agg, activation, slope)

    if params.theta is None:
        raise DimensionMismatch("the residual branch needs theta")
    h0 = as_matrix(h0, "h0")
    check_rows(h0, adj.n, "h0")
    check_inner(h0, params.theta, ("h0", "theta"))
    scale = _contractive(lam, adj.n, allow_zero=True)
    pre = scale * agg + (1.0 - scale) * (h0 @ params.theta)
    return apply_activation(pre, activation, slope)
