"""
Output rails: verification checks on propagation results and the randomized property
suites behind the energy bounds. Every check returns a CheckResult instead of raising.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np

from energy.bounds import (
    composed_energy_margin,
    leading_basis,
    propagation_bound_holds,
    sample_in_space,
    superadditivity_margin,
    weight_bound_holds,
)
from energy.dirichlet import leaky_relu_energy_ratio
from graph.core import Graph, NormalizationMode, NormalizedAdjacency, build_graph, normalize, spmm
from helper import DEFAULT_REL_TOL, AIRCError, make_rng
from linalg.solve import lambda_values, solve_residual_system
from model.depth import DepthTrace
from model.propagate import simplified_limit

logger = logging.getLogger(__name__)

LIMIT_AGREEMENT_TOL = 1e-8
FIXED_POINT_TOL = 1e-9
ENERGY_SLACK = 1e-12
PROPERTY_SLACK = 1e-10
RANK_EVERY = 25


@dataclass
class CheckResult:
    """Check Result Dataclass"""
    passed: bool
    margin: float
    issues: List[str] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)


class CheckType(Enum):
    LIMIT_AGREEMENT = "limit_agreement"
    RANK_PRESERVATION = "rank_preservation"
    FIXED_POINT = "fixed_point"
    ENERGY_BOUND = "energy_bound"
    ACTIVATION_ENERGY = "activation_energy"
    WEIGHT_BOUND = "weight_bound"
    PROPAGATION_BOUND = "propagation_bound"
    COMPOSED_BOUND = "composed_bound"
    SUPERADDITIVITY = "superadditivity"
    OUT_OF_SPACE = "out_of_space_counterexample"


def random_graph(n: int, rng: np.random.Generator, extra_edges: Optional[int] = None) -> Graph:
    """A cycle through all nodes plus random chords: connected, no isolated nodes."""
    ring = np.column_stack((np.arange(n), (np.arange(n) + 1) % n))
    extra = n if extra_edges is None else extra_edges
    src = rng.integers(0, n, size=extra)
    dst = rng.integers(0, n, size=extra)
    chords = np.column_stack((src, dst))[src != dst]
    pairs = np.vstack((ring, chords))
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    return build_graph(np.column_stack((pairs, np.ones(len(pairs)))), n)


def random_instance(rng: np.random.Generator, max_nodes: int = 64, max_dim: int = 8,
                    lam_range: Tuple[float, float] = (0.05, 0.95)):
    n = int(rng.integers(3, max_nodes + 1))
    d = int(rng.integers(1, max_dim + 1))
    adj = normalize(random_graph(n, rng), NormalizationMode.PLAIN)
    lam = rng.uniform(*lam_range, size=n)
    h0 = rng.standard_normal((n, d))
    return adj, lam, h0


class OutputRails:
    """Verification checks for propagation outputs."""

    def __init__(self, tol: float = LIMIT_AGREEMENT_TOL, rel_tol: float = DEFAULT_REL_TOL,
                 rank_every: int = RANK_EVERY):
        self.tol = tol
        self.rel_tol = rel_tol
        self.rank_every = rank_every

    def check_limit(self, lam, adj: NormalizedAdjacency, h0) -> Dict[CheckType, CheckResult]:
        """Unrolled limit against the closed form, rank along the way, fixed-point residual."""
        try:
            closed = solve_residual_system(lam, adj, h0)
            unrolled, steps, ranks = simplified_limit(
                lam, adj, h0, tol=self.tol / 10.0, rank_every=self.rank_every, rel_tol=self.rel_tol
            )
        except AIRCError as e:
            issue = f"{type(e).__name__}: {e}"
            return {kind: CheckResult(False, float("-inf"), [issue]) for kind in
                    (CheckType.LIMIT_AGREEMENT, CheckType.RANK_PRESERVATION, CheckType.FIXED_POINT)}

        results = {}
        scale = np.linalg.norm(closed)
        error = np.linalg.norm(unrolled - closed) / (scale if scale > 0 else 1.0)
        results[CheckType.LIMIT_AGREEMENT] = CheckResult(
            passed=error <= self.tol,
            margin=self.tol - error,
            issues=[] if error <= self.tol else [f"relative error {error:.3e} above {self.tol:.1e}"],
            metrics={"relative_error": float(error), "steps": steps},
        )

        expected = ranks[0]
        drift = [r for r in ranks if r != expected]
        results[CheckType.RANK_PRESERVATION] = CheckResult(
            passed=not drift,
            margin=-float(len(drift)),
            issues=[f"rank changed from {expected} to {drift[0]}"] if drift else [],
            metrics={"rank": expected, "recorded": len(ranks)},
        )

        values = lambda_values(lam, adj.n)[:, None]
        residual = np.linalg.norm(closed - values * spmm(adj, closed) - (1.0 - values) * h0)
        limit = FIXED_POINT_TOL * (scale if scale > 0 else 1.0)
        results[CheckType.FIXED_POINT] = CheckResult(
            passed=residual <= limit,
            margin=float(limit - residual),
            issues=[] if residual <= limit else [f"fixed-point residual {residual:.3e}"],
            metrics={"residual": float(residual)},
        )
        return results

    def check_energy_bound(self, trace: DepthTrace) -> CheckResult:
        """Final-layer energy against the lower bound; skipped when the alignment hypothesis fails."""
        bound = trace.bound
        if bound is None:
            return CheckResult(True, 0.0, ["no bound for this activation"], {"applicable": 0.0})
        measured = trace.energy_report.per_layer_energy[-1]
        metrics = {
            "measured": measured,
            "bound": bound.bound_value,
            "bound_at_depth": bound.value_at_depth(len(trace.energy_report) - 1),
            "applicable": float(trace.alignment_nonnegative),
            "estimated_sigma": float(bound.estimated),
        }
        if not trace.alignment_nonnegative:
            return CheckResult(True, 0.0, ["trace alignment negative, hypothesis unmet"], metrics)
        margin = measured - bound.bound_value
        return CheckResult(
            passed=margin >= 0.0,
            margin=margin,
            issues=[] if margin >= 0.0 else [f"energy {measured:.3e} below bound {bound.bound_value:.3e}"],
            metrics=metrics,
        )


def _suite_result(violations: int, count: int, worst: float, what: str) -> CheckResult:
    return CheckResult(
        passed=violations == 0,
        margin=worst,
        issues=[f"{violations} of {count} {what} violated"] if violations else [],
        metrics={"instances": count, "violations": violations, "worst_margin": worst},
    )


def activation_energy_suite(count: int = 10_000, seed: int = 0,
                            slopes=(0.01, 0.2, 0.5), graphs: int = 8) -> CheckResult:
    """ℰ(LeakyReLU_α(f)) >= α²ℰ(f) over random vectors, graphs and slopes."""
    rng = make_rng(seed)
    adjs = [normalize(random_graph(int(rng.integers(5, 41)), rng)) for _ in range(graphs)]
    violations, worst = 0, float("inf")
    for k in range(count):
        adj = adjs[k % graphs]
        alpha = slopes[k % len(slopes)]
        before, after = leaky_relu_energy_ratio(adj, rng.standard_normal(adj.n), alpha)
        margin = after - alpha ** 2 * before
        worst = min(worst, margin)
        violations += margin < -ENERGY_SLACK
    return _suite_result(violations, count, worst, "activation energy checks")


def weight_bound_suite(count: int = 500, seed: int = 0) -> CheckResult:
    """||fW|| >= σ_r(W)||f|| for f drawn inside the leading left singular subspace of W."""
    rng = make_rng(seed)
    violations = 0
    for _ in range(count):
        rows, cols = rng.integers(2, 9, size=2)
        rank = int(rng.integers(1, min(rows, cols) + 1))
        w = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
        basis, _ = leading_basis(w)
        violations += not weight_bound_holds(w, sample_in_space(basis, rng), PROPERTY_SLACK)
    return _suite_result(violations, count, 0.0, "weight bound checks")


def propagation_bound_suite(count: int = 500, seed: int = 0) -> CheckResult:
    """||Λ𝓐f|| >= λ_min σ_r(𝓐)||f|| for f in the range of 𝓐."""
    rng = make_rng(seed)
    violations = 0
    for _ in range(count):
        adj = normalize(random_graph(int(rng.integers(3, 25)), rng))
        basis, sigma_r = leading_basis(adj.to_dense())
        lam = rng.uniform(0.05, 0.95, size=adj.n)
        f = sample_in_space(basis, rng)
        violations += not propagation_bound_holds(adj, lam, f, sigma_r, PROPERTY_SLACK)
    return _suite_result(violations, count, 0.0, "propagation bound checks")


def composed_bound_suite(count: int = 500, seed: int = 0, static: bool = True) -> CheckResult:
    """
    ℰ(Λ𝓐XW) >= λ_min²σ_r(𝓐)²σ_r(W)²ℰ(X) for X with rows in col(W) and columns in the range of 𝓐.
    With static=False Λ is a random diagonal, where the inequality is audited, not guaranteed.
    """
    rng = make_rng(seed)
    violations, worst = 0, float("inf")
    for _ in range(count):
        adj = normalize(random_graph(int(rng.integers(4, 25)), rng))
        adj_basis, sigma_r = leading_basis(adj.to_dense())
        d = int(rng.integers(2, 7))
        rank = int(rng.integers(1, d + 1))
        w = rng.standard_normal((d, rank)) @ rng.standard_normal((rank, d))
        w_basis, _ = leading_basis(w)
        x = adj_basis @ adj_basis.T @ rng.standard_normal((adj.n, d)) @ w_basis @ w_basis.T
        lam = np.full(adj.n, rng.uniform(0.1, 0.9)) if static else rng.uniform(0.1, 0.9, size=adj.n)
        margin = composed_energy_margin(adj, lam, x, w, sigma_r)
        worst = min(worst, margin)
        violations += margin < -PROPERTY_SLACK
    return _suite_result(violations, count, worst, "composed energy bound checks")


def superadditivity_suite(count: int = 500, seed: int = 0) -> CheckResult:
    """ℰ(X + Y) >= ℰ(X) + ℰ(Y) whenever tr(Xᵀ𝓛Y) >= 0; pairs with negative alignment are skipped."""
    rng = make_rng(seed)
    violations, tested, worst = 0, 0, float("inf")
    for _ in range(count):
        adj = normalize(random_graph(int(rng.integers(4, 30)), rng))
        d = int(rng.integers(1, 5))
        x, y = rng.standard_normal((adj.n, d)), rng.standard_normal((adj.n, d))
        alignment, margin = superadditivity_margin(adj, x, y)
        if alignment < 0:
            alignment, margin = superadditivity_margin(adj, x, -y)
        tested += 1
        worst = min(worst, margin)
        violations += margin < -PROPERTY_SLACK
    return _suite_result(violations, tested, worst, "superadditivity checks")


def out_of_space_counterexample() -> CheckResult:
    """W = [[1, 0], [0, 0]] and f = [0, 1]: f lies outside col(W), so the weight bound must fail."""
    violated = not weight_bound_holds(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([0.0, 1.0]))
    return CheckResult(
        passed=violated,
        margin=1.0 if violated else -1.0,
        issues=[] if violated else ["out-of-space vector satisfied the bound"],
        metrics={"violated": float(violated)},
    )


def format_issues(results: Dict[CheckType, CheckResult]) -> str:
    """ One line per check: ✅/❌, name, margin, and the issues of failed checks. """
    lines = []
    for kind, result in results.items():
        mark = "✅ PASS" if result.passed else "❌ FAIL"
        line = f"{mark} | {kind.value} | margin {result.margin:.3e}"
        if result.issues:
            line += " | " + "; ".join(result.issues)
        lines.append(line)
    return "\n".join(lines)
