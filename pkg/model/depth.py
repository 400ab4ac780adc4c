from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional
import logging

import numpy as np

from energy.bounds import Theorem2Bound, adjacency_sigma_r, theorem2_bound
from energy.dirichlet import dirichlet_energy, trace_alignment
from energy.report import EnergyReport
from graph.core import NormalizedAdjacency, spmm
from guards.input import as_matrix, check_rows
from helper import DEFAULT_REL_TOL, DEFAULT_SLOPE, UsageError, make_rng
from linalg.dense import random_orthogonal, smallest_nonzero_singular
from linalg.solve import lambda_values
from model.propagate import (
    Activation,
    LayerParams,
    activation_slope,
    airc_layer_forward,
    simplified_step,
)

logger = logging.getLogger(__name__)


class DepthMode(Enum):
    LINEAR = "linear"
    GCN = "gcn"
    AIRC = "airc"


@dataclass
class DepthTrace:
    energy_report: EnergyReport
    embeddings: Optional[List[np.ndarray]] = None
    alignments: List[float] = field(default_factory=list)

    @property
    def alignment_nonnegative(self) -> bool:
        return all(a >= 0.0 for a in self.alignments)

    @property
    def bound(self) -> Optional[Theorem2Bound]:
        return self.energy_report.bound

    def bound_satisfied(self) -> Optional[bool]:
        """Final energy against the bound; None when there is no bound or the alignment went negative."""
        bound = self.bound
        if bound is None or not self.alignment_nonnegative:
            return None
        return self.energy_report.per_layer_energy[-1] >= bound.bound_value


def _layer_weights(depth: int, dim: int, rng: np.random.Generator, gain: float,
                   with_theta: bool) -> List[LayerParams]:
    layers = []
    for _ in range(depth):
        w = random_orthogonal(dim, dim, rng, gain)
        theta = random_orthogonal(dim, dim, rng, gain) if with_theta else None
        layers.append(LayerParams(w=w, theta=theta))
    return layers


def _infimum_sq_sigma(matrices) -> float:
    return min(smallest_nonzero_singular(m) ** 2 for m in matrices)


def run_depth_experiment(adj: NormalizedAdjacency, h0, depth: int, mode=DepthMode.AIRC, lam=None,
                         activation=Activation.LEAKY_RELU, slope: float = DEFAULT_SLOPE,
                         seed: int = 0, gain: float = 1.0, snapshot: bool = False,
                         rel_tol: float = DEFAULT_REL_TOL,
                         layers: Optional[List[LayerParams]] = None) -> DepthTrace:
    """
    Applies one kind of layer `depth` times and records energy, rank and effective rank
    of H0 and every layer output.
    Args:
        mode: linear (identity weights and activation), gcn (σ(𝓐HW)) or airc (full residual layer)
        lam: residual strengths; required for linear and airc
        gain (float): scale of the random orthogonal weights
        layers: fixed per-layer weights used instead of the random orthogonal ones
    """
    if depth < 1:
        raise UsageError(f"depth must be >= 1, got {depth}")
    mode = DepthMode(mode)
    h0 = as_matrix(h0, "h0")
    check_rows(h0, adj.n, "h0")
    if mode is not DepthMode.GCN and lam is None:
        raise UsageError(f"{mode.value} mode needs residual strengths")

    rng = make_rng(seed)
    if layers is not None:
        if mode is DepthMode.LINEAR or len(layers) != depth:
            raise UsageError(f"fixed weights need a gcn or airc run with exactly {depth} layers")
        layers = list(layers)
    elif mode is DepthMode.LINEAR:
        layers = []
    else:
        layers = _layer_weights(depth, h0.shape[1], rng, gain, with_theta=mode is DepthMode.AIRC)

    report = EnergyReport()
    report.record(adj, h0, rel_tol)
    trace = DepthTrace(energy_report=report, embeddings=[h0] if snapshot else None)

    h = h0
    for layer in range(depth):
        if mode is DepthMode.LINEAR:
            h = simplified_step(lam, adj, h, h0)
        elif mode is DepthMode.GCN:
            h = airc_layer_forward(None, adj, h, h0, layers[layer], activation, slope, exact_gcn=True)
        else:
            params = layers[layer]
            scale = lambda_values(lam, adj.n)[:, None]
            trace.alignments.append(trace_alignment(
                adj, scale * spmm(adj, h @ params.w), (1.0 - scale) * (h0 @ params.theta)
            ))
            h = airc_layer_forward(lam, adj, h, h0, params, activation, slope)
        report.record(adj, h, rel_tol)
        if snapshot:
            trace.embeddings.append(h)

    if mode is DepthMode.AIRC:
        report.bound = _depth_bound(adj, h0, lam, layers, activation, slope, rel_tol, seed)
        if not trace.alignment_nonnegative:
            negatives = sum(a < 0 for a in trace.alignments)
            logger.warning(f"trace alignment negative at {negatives} of {depth} layers; energy bound not applicable")
    logger.debug(f"{mode.value} depth run: energy ratio {report.energy_ratio:.3e} over {depth} layers")
    return trace


def _depth_bound(adj, h0, lam, layers, activation, slope, rel_tol, seed) -> Optional[Theorem2Bound]:
    alpha = activation_slope(activation, slope)
    if alpha is None:
        return None
    values = lambda_values(lam, adj.n)
    sigma_r_adj, estimated = adjacency_sigma_r(adj, rel_tol, seed)
    return theorem2_bound(
        alpha=alpha,
        lambda_min=float(values.min()),
        lambda_max=float(values.max()),
        sigma_r_adj=sigma_r_adj,
        sigma_bar_w=_infimum_sq_sigma(p.w for p in layers),
        sigma_bar_theta=_infimum_sq_sigma(p.theta for p in layers),
        e0=max(dirichlet_energy(adj, h0), 0.0),
        estimated=estimated,
    )
