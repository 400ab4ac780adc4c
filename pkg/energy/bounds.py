"""
Spectral lower bounds on norms and Dirichlet energy, as executable checks.

The weight bound ||fW|| >= σ_r(W)||f|| and the propagation bound
||Λ𝓐f|| >= λ_min σ_r(𝓐)||f|| need f inside the relevant singular subspace;
the samplers below construct such f. The energy bound of a stack of IRC layers
is produced by theorem2_bound.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple
import logging

import numpy as np
from scipy.sparse.linalg import ArpackError, eigsh

from energy.dirichlet import dirichlet_energy, trace_alignment
from graph.core import NormalizedAdjacency, spmm
from guards.input import as_matrix, check_inner
from helper import (
    DEFAULT_REL_TOL,
    DENSE_SVD_LIMIT,
    ConvergenceFailure,
    DivergentSeries,
    InvalidLambda,
    InvalidSlope,
    UsageError,
    ZeroMatrix,
    make_rng,
)
from linalg.dense import smallest_nonzero_singular, svd
from linalg.solve import lambda_values

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-10
SPECTRUM_PROBES = 16
SPECTRUM_PROBES_MAX = 256
DENSE_EIG_LIMIT = 4096


@dataclass(frozen=True)
class Theorem2Bound:
    """
    Lower bound on the energy of the last layer of an IRC stack.
    sigma_bar_w / sigma_bar_theta are infima over layers of the SQUARED smallest
    non-zero singular values of W and Θ.
    """
    alpha: float
    lambda_min: float
    lambda_max: float
    sigma_r_adj: float
    sigma_bar_w: float
    sigma_bar_theta: float
    e0: float
    eta: float
    zeta: float
    bound_value: float
    estimated: bool = False

    @property
    def contraction(self) -> float:
        return self.eta * self.sigma_bar_w

    def value_at_depth(self, depth: int) -> float:
        """The recursion unrolled exactly `depth` times, starting from e0."""
        if depth < 0:
            raise UsageError(f"depth must be >= 0, got {depth}")
        rate = self.contraction
        head = rate ** depth * self.e0
        if rate == 0.0:
            tail = 1.0 if depth > 0 else 0.0
        else:
            tail = (1.0 - rate ** depth) / (1.0 - rate)
        return head + self.zeta * self.sigma_bar_theta * self.e0 * tail


def theorem2_bound(alpha: float, lambda_min: float, lambda_max: float, sigma_r_adj: float,
                   sigma_bar_w: float, sigma_bar_theta: float, e0: float,
                   estimated: bool = False) -> Theorem2Bound:
    """
    η = α²λ_min²σ_r(𝓐)², ζ = α²(1 - λ_max)², bound = ζ σ̄_Θ e0 / (1 - η σ̄_W).
    Args:
        alpha (float): activation slope, 1 for identity
        estimated (bool): σ_r(𝓐) came from the iterative fallback instead of a dense SVD
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidSlope(f"alpha must lie in (0, 1], got {alpha}")
    if not 0.0 < lambda_min <= lambda_max < 1.0:
        raise InvalidLambda(f"need 0 < lambda_min <= lambda_max < 1, got {lambda_min}, {lambda_max}")
    if sigma_r_adj <= 0.0 or sigma_bar_w < 0.0 or sigma_bar_theta < 0.0 or e0 < 0.0:
        raise UsageError("sigma_r_adj must be > 0; sigma_bar_w, sigma_bar_theta and e0 must be >= 0")

    eta = alpha ** 2 * lambda_min ** 2 * sigma_r_adj ** 2
    zeta = alpha ** 2 * (1.0 - lambda_max) ** 2
    if eta * sigma_bar_w >= 1.0:
        raise DivergentSeries(f"eta * sigma_bar_w = {eta * sigma_bar_w} must be < 1")
    bound_value = zeta * sigma_bar_theta * e0 / (1.0 - eta * sigma_bar_w)
    return Theorem2Bound(
        alpha=alpha, lambda_min=lambda_min, lambda_max=lambda_max, sigma_r_adj=sigma_r_adj,
        sigma_bar_w=sigma_bar_w, sigma_bar_theta=sigma_bar_theta, e0=e0,
        eta=eta, zeta=zeta, bound_value=bound_value, estimated=estimated,
    )


def adjacency_sigma_r(adj: NormalizedAdjacency, rel_tol: float = DEFAULT_REL_TOL,
                      seed: int = 0) -> Tuple[float, bool]:
    """
    σ_r(𝓐). Dense SVD up to DENSE_SVD_LIMIT nodes; above that, the smallest-magnitude
    eigenvalues of the symmetric operator from Lanczos with a random start vector. The probe
    count doubles while every probed eigenvalue is zero; up to DENSE_EIG_LIMIT nodes, or
    when the null space outgrows the probes, a dense symmetric eigendecomposition decides.
    Returns:
        (sigma_r, estimated)
    """
    if adj.n <= DENSE_SVD_LIMIT:
        return smallest_nonzero_singular(adj.to_dense(), rel_tol), False

    logger.warning(f"σ_r(𝓐) for n={adj.n} is estimated iteratively, not by dense SVD")
    v0 = make_rng(seed).standard_normal(adj.n)
    k = min(SPECTRUM_PROBES, adj.n - 2)
    while True:
        try:
            values = eigsh(adj.matrix, k=k, which="SM", v0=v0, return_eigenvectors=False)
        except ArpackError as e:
            logger.warning(f"Lanczos with {k} probes failed ({e}); trying the dense spectrum")
            break
        magnitudes = np.abs(values)
        nonzero = magnitudes[magnitudes > rel_tol]
        if nonzero.size:
            return float(nonzero.min()), True
        if adj.n <= DENSE_EIG_LIMIT or k >= min(SPECTRUM_PROBES_MAX, adj.n - 2):
            break
        k = min(2 * k, SPECTRUM_PROBES_MAX, adj.n - 2)
        logger.debug(f"all probed eigenvalues of 𝓐 are zero; retrying with {k} probes")

    return _dense_sigma_r(adj, rel_tol), False


def _dense_sigma_r(adj: NormalizedAdjacency, rel_tol: float) -> float:
    if adj.n > DENSE_EIG_LIMIT:
        raise ConvergenceFailure(
            f"null space of 𝓐 exceeds {SPECTRUM_PROBES_MAX} probes and n={adj.n} is too large for a dense fallback"
        )
    magnitudes = np.abs(np.linalg.eigvalsh(adj.to_dense()))
    top = magnitudes.max()
    if top == 0.0:
        raise ZeroMatrix("𝓐 is the zero matrix")
    return float(magnitudes[magnitudes > rel_tol * top].min())


def leading_basis(m: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> Tuple[np.ndarray, float]:
    """Left singular vectors with σ > rel_tol·σ_1, and σ_r."""
    result = svd(m)
    sigma = result.singular_values
    if sigma[0] == 0.0:
        raise ZeroMatrix("the zero matrix has no leading singular subspace")
    keep = sigma > rel_tol * sigma[0]
    return result.u[:, keep], float(sigma[keep][-1])


def sample_in_space(basis: np.ndarray, rng: np.random.Generator, columns: Optional[int] = None) -> np.ndarray:
    """Random vector (or matrix with `columns` columns) inside span(basis)."""
    width = 1 if columns is None else columns
    sample = basis @ rng.standard_normal((basis.shape[1], width))
    return sample[:, 0] if columns is None else sample


def weight_bound_holds(w, f, slack: float = BOUND_SLACK) -> bool:
    """||fW|| >= ||f|| σ_r(W) for a row vector f."""
    w = as_matrix(w, "w")
    f = as_matrix(f, "f", allow_vector=True).reshape(1, -1)
    check_inner(f, w, ("f", "w"))
    sigma_r = smallest_nonzero_singular(w)
    lhs = float(np.linalg.norm(f @ w))
    rhs = float(np.linalg.norm(f)) * sigma_r
    return lhs - rhs >= -slack * max(1.0, rhs)


def propagation_bound_holds(adj: NormalizedAdjacency, lam, f, sigma_r_adj: Optional[float] = None,
                            slack: float = BOUND_SLACK) -> bool:
    """||Λ𝓐f|| >= λ_min σ_r(𝓐) ||f||."""
    values = lambda_values(lam, adj.n)
    f = as_matrix(f, "f", allow_vector=True).reshape(adj.n, -1)
    if sigma_r_adj is None:
        sigma_r_adj, _ = adjacency_sigma_r(adj)
    lhs = float(np.linalg.norm(values[:, None] * spmm(adj, f)))
    rhs = float(values.min()) * sigma_r_adj * float(np.linalg.norm(f))
    return lhs - rhs >= -slack * max(1.0, rhs)


def singular_lower_bound_checks(f, w=None, adj: Optional[NormalizedAdjacency] = None, lam=None,
                                slack: float = BOUND_SLACK) -> Dict[str, bool]:
    """
    Runs whichever norm bounds the arguments allow.
    Returns:
        {"weight": bool} when w is given, {"propagation": bool} when adj and lam are given
    """
    if w is None and (adj is None or lam is None):
        raise UsageError("pass w, or adj together with lam")
    checks = {}
    if w is not None:
        checks["weight"] = weight_bound_holds(w, f, slack)
    if adj is not None and lam is not None:
        checks["propagation"] = propagation_bound_holds(adj, lam, f, slack=slack)
    return checks


def composed_energy_margin(adj: NormalizedAdjacency, lam, x, w, sigma_r_adj: Optional[float] = None) -> float:
    """
    ℰ(Λ𝓐XW) - λ_min² σ_r(𝓐)² σ_r(W)² ℰ(X), relative to the larger side.
    Meaningful for X with rows in col(W) and columns in the range of 𝓐.
    """
    values = lambda_values(lam, adj.n)
    x = as_matrix(x, "x")
    w = as_matrix(w, "w")
    check_inner(x, w, ("x", "w"))
    if sigma_r_adj is None:
        sigma_r_adj, _ = adjacency_sigma_r(adj)
    sigma_r_w = smallest_nonzero_singular(w)
    lhs = dirichlet_energy(adj, values[:, None] * spmm(adj, x @ w))
    rhs = values.min() ** 2 * sigma_r_adj ** 2 * sigma_r_w ** 2 * dirichlet_energy(adj, x)
    return float((lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))


def superadditivity_margin(adj: NormalizedAdjacency, x, y) -> Tuple[float, float]:
    """
    Returns:
        (trace_alignment(x, y), relative margin of ℰ(x + y) - ℰ(x) - ℰ(y));
        the margin is nonnegative whenever the alignment is
    """
    x = as_matrix(x, "x", allow_vector=True)
    y = as_matrix(y, "y", allow_vector=True)
    alignment = trace_alignment(adj, x, y)
    ex, ey = dirichlet_energy(adj, x), dirichlet_energy(adj, y)
    margin = dirichlet_energy(adj, x + y) - ex - ey
    return alignment, float(margin / max(1.0, ex + ey))
