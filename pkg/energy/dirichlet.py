"""
Dirichlet energy ℰ(X) = tr(Xᵀ(I - 𝓐)X) and the cross term tr(Xᵀ(I - 𝓐)Y).
𝓛 is never materialized; every form costs one spmm and a Frobenius product.
"""

from typing import Tuple

import numpy as np

from graph.core import Graph, NormalizationMode, NormalizedAdjacency, spmm
from guards.input import as_matrix, check_rows, check_same_shape
from helper import InvalidSlope


def _as_columns(adj: NormalizedAdjacency, x, name: str) -> np.ndarray:
    x = as_matrix(x, name, allow_vector=True)
    check_rows(x, adj.n, name)
    return x.reshape(adj.n, -1)


def dirichlet_energy(adj: NormalizedAdjacency, x) -> float:
    x = _as_columns(adj, x, "x")
    return float(np.sum(x * x) - np.sum(x * spmm(adj, x)))


def trace_alignment(adj: NormalizedAdjacency, x, y) -> float:
    """tr(xᵀ(I - 𝓐)y); nonnegative values are what the energy lower bound assumes."""
    x = _as_columns(adj, x, "x")
    y = _as_columns(adj, y, "y")
    check_same_shape(x, y)
    return float(np.sum(x * y) - np.sum(x * spmm(adj, y)))


def edge_sum_energy(g: Graph, x, mode=NormalizationMode.AUGMENTED) -> float:
    """
    ½ Σ_(i,j) a_ij ||x_i/√s_i - x_j/√s_j||² over ordered pairs, with s = 1 + d (augmented)
    or s = d (plain). Augmented self-loops contribute nothing. Oracle for dirichlet_energy.
    """
    mode = NormalizationMode(mode)
    x = as_matrix(x, "x", allow_vector=True).reshape(g.n, -1)
    scale = g.degrees + 1.0 if mode is NormalizationMode.AUGMENTED else g.degrees
    scaled = x / np.sqrt(scale)[:, None]
    rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
    diff = scaled[rows] - scaled[g.indices]
    return float(0.5 * np.sum(g.weights * np.sum(diff * diff, axis=1)))


def leaky_relu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0, x, alpha * x)


def leaky_relu_energy_ratio(adj: NormalizedAdjacency, f, alpha: float) -> Tuple[float, float]:
    """
    Returns:
        (ℰ(f), ℰ(LeakyReLU_α(f))); the second is never below α² times the first.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidSlope(f"leaky ReLU slope must lie in (0, 1), got {alpha}")
    f = _as_columns(adj, f, "f")
    return dirichlet_energy(adj, f), dirichlet_energy(adj, leaky_relu(f, alpha))
