"""
Experiment 1: Propagation limit and energy-bound property suites
Checks the closed-form limit and rank preservation of the simplified dynamics,
the randomized norm/energy inequalities and exact GCN recovery.
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

from dataclasses import dataclass, field
from typing import Dict, List
import time

import numpy as np

from graph.core import normalize, spmm
from helper import configure_logging, make_rng
from model.propagate import LayerParams, airc_layer_forward
from rails.output import (
    CheckType,
    OutputRails,
    activation_energy_suite,
    composed_bound_suite,
    out_of_space_counterexample,
    propagation_bound_suite,
    random_graph,
    random_instance,
    superadditivity_suite,
    weight_bound_suite,
)

LIMIT_INSTANCES = 50
LIMIT_SECONDS = 10.0
GCN_INSTANCES = 100


@dataclass
class TheoryExperimentResult:
    test_case: str
    instances: int
    violations: int
    detail: str
    passed: bool
    metrics: Dict[str, float] = field(default_factory=dict)


class TheoryExperiment:
    """Acceptance checks that need no training."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rails = OutputRails()

    def limit_and_rank(self) -> List[TheoryExperimentResult]:
        rng = make_rng(self.seed)
        start = time.perf_counter()
        limit_fail, rank_fail, worst = 0, 0, 0.0
        for _ in range(LIMIT_INSTANCES):
            adj, lam, h0 = random_instance(rng)
            results = self.rails.check_limit(lam, adj, h0)
            limit = results[CheckType.LIMIT_AGREEMENT]
            limit_fail += not (limit.passed and results[CheckType.FIXED_POINT].passed)
            rank_fail += not results[CheckType.RANK_PRESERVATION].passed
            worst = max(worst, limit.metrics.get("relative_error", np.inf))
        seconds = time.perf_counter() - start
        return [
            TheoryExperimentResult(
                test_case="Limit equals closed form",
                instances=LIMIT_INSTANCES,
                violations=limit_fail,
                detail=f"worst relative error {worst:.2e}, {seconds:.2f}s",
                passed=limit_fail == 0 and seconds < LIMIT_SECONDS,
                metrics={"worst_relative_error": worst, "seconds": seconds},
            ),
            TheoryExperimentResult(
                test_case="Rank preserved along the dynamics",
                instances=LIMIT_INSTANCES,
                violations=rank_fail,
                detail="numerical rank at rel_tol 1e-9",
                passed=rank_fail == 0,
            ),
        ]

    def property_suites(self) -> List[TheoryExperimentResult]:
        suites = {
            "Leaky ReLU energy contraction": activation_energy_suite(10_000, self.seed),
            "Weight norm lower bound": weight_bound_suite(500, self.seed),
            "Propagation norm lower bound": propagation_bound_suite(500, self.seed),
            "Composed energy bound (static Λ)": composed_bound_suite(500, self.seed),
            "Energy superadditivity": superadditivity_suite(500, self.seed),
            "Out-of-space counterexample violates bound": out_of_space_counterexample(),
        }
        return [
            TheoryExperimentResult(
                test_case=name,
                instances=int(result.metrics.get("instances", 1)),
                violations=int(result.metrics.get("violations", 0)),
                detail="; ".join(result.issues) or f"margin {result.margin:.2e}",
                passed=result.passed,
                metrics=result.metrics,
            )
            for name, result in suites.items()
        ]

    def gcn_recovery(self) -> TheoryExperimentResult:
        rng = make_rng(self.seed + 7)
        mismatches = 0
        for _ in range(GCN_INSTANCES):
            adj = normalize(random_graph(int(rng.integers(3, 40)), rng))
            d_in, d_out = rng.integers(1, 9, size=2)
            h = rng.standard_normal((adj.n, d_in))
            w = rng.standard_normal((d_in, d_out))
            ours = airc_layer_forward(None, adj, h, h, LayerParams(w=w), exact_gcn=True)
            reference = np.maximum(spmm(adj, h @ w), 0.0)
            mismatches += not np.array_equal(ours, reference)
        return TheoryExperimentResult(
            test_case="Exact GCN mode equals reference layer",
            instances=GCN_INSTANCES,
            violations=mismatches,
            detail="bitwise comparison",
            passed=mismatches == 0,
        )

    def run_experiment(self) -> List[TheoryExperimentResult]:
        results = self.limit_and_rank() + self.property_suites() + [self.gcn_recovery()]
        for r in results:
            mark = "✅ PASS" if r.passed else "❌ FAIL"
            print(f"{mark} | {r.test_case} | {r.violations}/{r.instances} violations | {r.detail}")
        return results


def main():
    """Run the experiment standalone"""
    configure_logging()
    print("🔬 Running Theory Suites")
    print("=" * 80)
    results = TheoryExperiment().run_experiment()
    passed = sum(r.passed for r in results)
    print(f"\n📊 Passed: {passed}/{len(results)}")
    sys.exit(0 if passed == len(results) else 1)


if __name__ == "__main__":
    main()
