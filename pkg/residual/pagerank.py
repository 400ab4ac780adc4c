from dataclasses import dataclass
import logging

import numpy as np
import scipy.sparse as sp

from graph.core import Graph
from helper import (
    PAGERANK_DAMPING,
    PAGERANK_MAX_ITER,
    PAGERANK_TOL,
    ConvergenceFailure,
    InvalidTolerance,
    UsageError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PageRankScores:
    scores: np.ndarray
    damping: float
    iterations_used: int
    residual: float


def pagerank(g: Graph, damping: float = PAGERANK_DAMPING, tol: float = PAGERANK_TOL,
             max_iter: int = PAGERANK_MAX_ITER) -> PageRankScores:
    """
    Power iteration on the weighted random walk with uniform teleport.
    Mass leaving isolated nodes is spread uniformly, so scores always sum to 1.
    Converged when the L1 change between iterates is <= tol.
    """
    if not 0.0 < damping < 1.0:
        raise UsageError(f"damping must lie in (0, 1), got {damping}")
    if not tol > 0.0:
        raise InvalidTolerance(f"tol must be > 0, got {tol}")
    n = g.n
    if n == 0:
        raise UsageError("PageRank needs at least one node")

    # column-stochastic transition: P[i, j] = w_ij / d_j
    inv_degree = np.divide(1.0, g.degrees, out=np.zeros(n), where=g.degrees > 0)
    transition = sp.csr_array(g.adjacency() @ sp.diags_array(inv_degree))
    teleport = np.full(n, 1.0 / n)

    x = teleport.copy()
    for it in range(1, max_iter + 1):
        walked = damping * (transition @ x)
        # leaked mass: teleport share plus whatever sat on isolated nodes
        new_x = walked + (1.0 - walked.sum()) * teleport
        residual = float(np.abs(new_x - x).sum())
        x = new_x
        if residual <= tol:
            logger.debug(f"PageRank converged in {it} iterations (L1 change {residual:.3e})")
            return PageRankScores(scores=x, damping=damping, iterations_used=it, residual=residual)
    raise ConvergenceFailure(f"PageRank did not reach tol {tol} in {max_iter} iterations")
