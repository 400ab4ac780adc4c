"""
Dense kernels: one-sided Jacobi SVD, rank with tolerance, smallest non-zero
singular value, effective rank and random orthogonal weights.
"""

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from guards.input import as_matrix
from helper import (
    DEFAULT_REL_TOL,
    ConvergenceFailure,
    DimensionMismatch,
    InvalidTolerance,
    ZeroMatrix,
)

JACOBI_MAX_SWEEPS = 60
JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD, m = u @ diag(singular_values) @ v.T, singular values descending."""
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def _round_robin(cols: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yields rounds of disjoint column pairs; every pair appears once per sweep."""
    players = list(range(cols)) + ([-1] if cols % 2 else [])
    size = len(players)
    for _ in range(size - 1):
        pairs = [(players[k], players[size - 1 - k]) for k in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            p, q = zip(*pairs)
            yield np.array(p), np.array(q)
        players = [players[0], players[-1]] + players[1:-1]


def _jacobi(work: np.ndarray, max_sweeps: int, tol: float) -> np.ndarray:
    """Orthogonalizes the columns of work in place; returns the accumulated rotations."""
    cols = work.shape[1]
    v = np.eye(cols)
    if cols < 2:
        return v
    for _ in range(max_sweeps):
        rotated = False
        for p, q in _round_robin(cols):
            wp, wq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not np.any(active):
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for target in (work, v):
                up, uq = target[:, p], target[:, q]
                target[:, p] = c * up - s * uq
                target[:, q] = s * up + c * uq
        if not rotated:
            return v
    raise ConvergenceFailure(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _complete_columns(u: np.ndarray, null: np.ndarray) -> np.ndarray:
    """Replaces the null columns of u with an orthonormal completion."""
    if not np.any(null):
        return u
    rows = u.shape[0]
    kept = u[:, ~null]
    q, _ = np.linalg.qr(np.hstack((kept, np.eye(rows))))
    u = u.copy()
    u[:, null] = q[:, kept.shape[1]:kept.shape[1] + int(null.sum())]
    return u


def svd(m, max_sweeps: int = JACOBI_MAX_SWEEPS, tol: float = JACOBI_TOL) -> SvdResult:
    """
    Thin SVD by one-sided Jacobi rotations over round-robin column pairs.
    Sign convention: the largest-magnitude entry of each left singular vector is >= 0.
    """
    a = as_matrix(m, "m")
    if a.size == 0:
        raise DimensionMismatch(f"svd needs at least one entry, got shape {a.shape}")
    transposed = a.shape[0] < a.shape[1]
    work = (a.T if transposed else a).copy()

    right = _jacobi(work, max_sweeps, tol)
    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, work, right = sigma[order], work[:, order], right[:, order]

    floor = np.finfo(np.float64).eps * max(work.shape) * (sigma[0] if sigma.size else 0.0)
    null = sigma <= floor
    left = np.zeros_like(work)
    left[:, ~null] = work[:, ~null] / sigma[~null]
    left = _complete_columns(left, null)

    if transposed:
        left, right = right, left
    pivot = np.argmax(np.abs(left), axis=0)
    flip = left[pivot, np.arange(left.shape[1])] < 0
    left[:, flip] *= -1.0
    right[:, flip] *= -1.0
    return SvdResult(u=left, singular_values=sigma, v=right)


def _check_tol(rel_tol: float) -> None:
    if not 0.0 < rel_tol < 1.0:
        raise InvalidTolerance(f"rel_tol must lie in (0, 1), got {rel_tol}")


def numerical_rank(m, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Number of singular values above rel_tol * sigma_1 (0 for the zero matrix)."""
    _check_tol(rel_tol)
    sigma = svd(m).singular_values
    if sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > rel_tol * sigma[0]))


def smallest_nonzero_singular(m, rel_tol: float = DEFAULT_REL_TOL) -> float:
    _check_tol(rel_tol)
    sigma = svd(m).singular_values
    if sigma[0] == 0.0:
        raise ZeroMatrix("the zero matrix has no non-zero singular value")
    return float(sigma[sigma > rel_tol * sigma[0]][-1])


def effective_rank(m) -> float:
    """exp of the Shannon entropy of the normalized singular values; 0 for the zero matrix."""
    sigma = svd(m).singular_values
    total = sigma.sum()
    if total == 0.0:
        return 0.0
    p = sigma[sigma > 0] / total
    return float(np.exp(-np.sum(p * np.log(p))))


def random_orthogonal(rows: int, cols: int, rng: np.random.Generator, gain: float = 1.0) -> np.ndarray:
    """Matrix with orthonormal columns (or rows, when wide), scaled by gain."""
    tall = max(rows, cols)
    short = min(rows, cols)
    q, r = np.linalg.qr(rng.standard_normal((tall, short)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return gain * (q if rows >= cols else q.T)
