import logging

import numpy as np

from graph.core import NormalizedAdjacency, spmm
from guards.input import as_matrix, check_rows
from helper import ConvergenceFailure, DimensionMismatch, NonContractive

logger = logging.getLogger(__name__)

SOLVE_TOL = 1e-10
SOLVE_CHECK_EVERY = 10
SOLVE_MAX_ITER = 100_000


def lambda_values(lam, n: int) -> np.ndarray:
    """Accepts ResidualStrengths or a raw vector; returns a float64 column of length n."""
    values = np.asarray(getattr(lam, "values", lam), dtype=np.float64).reshape(-1)
    if values.shape[0] != n:
        raise DimensionMismatch(f"lambda has {values.shape[0]} entries, expected {n}")
    return values


def solve_residual_system(lam, adj: NormalizedAdjacency, h0, tol: float = SOLVE_TOL,
                          max_iter: int = SOLVE_MAX_ITER) -> np.ndarray:
    """
    Solves (I - Λ𝓐) Y = (I - Λ) H0 by the fixed-point iteration Y <- Λ𝓐Y + (I - Λ)H0.
    The residual is checked every 10 iterations against tol * ||(I - Λ)H0||_F.
    Raises:
        NonContractive: some λ_i >= 1
        ConvergenceFailure: max_iter reached
    """
    h0 = as_matrix(h0, "h0")
    check_rows(h0, adj.n, "h0")
    values = lambda_values(lam, adj.n)
    if np.any(values >= 1.0):
        raise NonContractive(f"λ_i must be < 1, got max {values.max()!r}")
    if np.any(values < 0.0):
        raise NonContractive(f"λ_i must be >= 0, got min {values.min()!r}")

    scale = values[:, None]
    rhs = (1.0 - scale) * h0
    target = tol * np.linalg.norm(rhs)
    y = rhs.copy()
    for it in range(1, max_iter + 1):
        y = scale * spmm(adj, y) + rhs
        if it % SOLVE_CHECK_EVERY == 0:
            residual = np.linalg.norm(y - scale * spmm(adj, y) - rhs)
            if residual <= target:
                logger.debug(f"residual system solved in {it} iterations (residual {residual:.3e})")
                return y
    raise ConvergenceFailure(f"residual system did not reach tol {tol} in {max_iter} iterations")
