"""
Experiment 2: Oversmoothing separation and layer cost
Energy decay of GCN against adaptive IRC over 64 layers on the synthetic SBM, the
energy lower-bound audit, and how the layer cost scales with |E| and d.
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

from dataclasses import dataclass
from typing import List
import time

import numpy as np

from database.setup_dataset import sbm_bundle
from graph.core import normalize
from graph.sbm import SbmParams, random_edge_graph
from helper import configure_logging, make_rng
from model.depth import DepthMode, run_depth_experiment
from model.propagate import LayerParams, airc_layer_forward
from residual.pagerank import pagerank
from residual.strengths import pagerank_lambda

DEPTH = 64
GCN_MAX_RATIO = 1e-3
AIRC_MIN_RATIO = 1e-2
EDGE_RATIO_RANGE = (1.5, 2.5)
DIM_RATIO_MAX = 4.5


@dataclass
class OversmoothingResult:
    test_case: str
    value: float
    threshold: str
    passed: bool


class OversmoothingExperiment:

    def __init__(self, seed: int = 0, depth: int = DEPTH):
        self.seed = seed
        self.depth = depth
        bundle = sbm_bundle(SbmParams(seed=seed))
        self.graph = bundle.graph
        self.adj = normalize(bundle.graph)
        self.h0 = bundle.features

    def energy_separation(self) -> List[OversmoothingResult]:
        lam = pagerank_lambda(pagerank(self.graph), top_fraction=0.1, lambda_max=0.7, lambda_min=0.3)
        gcn = run_depth_experiment(self.adj, self.h0, self.depth, DepthMode.GCN, seed=self.seed)
        airc = run_depth_experiment(self.adj, self.h0, self.depth, DepthMode.AIRC, lam=lam, seed=self.seed)

        results = [
            OversmoothingResult("GCN energy collapses", gcn.energy_report.energy_ratio,
                                f"<= {GCN_MAX_RATIO:g}", gcn.energy_report.energy_ratio <= GCN_MAX_RATIO),
            OversmoothingResult("Adaptive IRC energy retained", airc.energy_report.energy_ratio,
                                f">= {AIRC_MIN_RATIO:g}", airc.energy_report.energy_ratio >= AIRC_MIN_RATIO),
        ]
        satisfied = airc.bound_satisfied()
        if satisfied is None:
            print(f"ℹ️  Energy bound audit skipped: trace alignment went negative "
                  f"({sum(a < 0 for a in airc.alignments)} of {self.depth} layers)")
        else:
            results.append(OversmoothingResult(
                "Final energy above lower bound", airc.energy_report.per_layer_energy[-1],
                f">= {airc.bound.bound_value:.3e}", satisfied,
            ))
        return results

    @staticmethod
    def _layer_seconds(n: int, num_edges: int, d: int, rng: np.random.Generator, repeats: int = 7) -> float:
        adj = normalize(random_edge_graph(n, num_edges, int(rng.integers(2**31))))
        lam = rng.uniform(0.1, 0.9, size=n)
        h = rng.standard_normal((n, d))
        params = LayerParams(w=rng.standard_normal((d, d)), theta=rng.standard_normal((d, d)))
        airc_layer_forward(lam, adj, h, h, params)
        timings = []
        for _ in range(repeats):
            start = time.perf_counter()
            airc_layer_forward(lam, adj, h, h, params)
            timings.append(time.perf_counter() - start)
        return float(np.median(timings))

    def complexity_scaling(self, n: int = 2000) -> List[OversmoothingResult]:
        rng = make_rng(self.seed)
        base = self._layer_seconds(n, 100_000, 16, rng)
        edge_ratio = self._layer_seconds(n, 200_000, 16, rng) / base
        dim_ratio = self._layer_seconds(n, 100_000, 32, rng) / base
        lo, hi = EDGE_RATIO_RANGE
        return [
            OversmoothingResult("Doubling |E| doubles layer time", edge_ratio, f"in [{lo}, {hi}]", lo <= edge_ratio <= hi),
            OversmoothingResult("Doubling d stays below d² growth", dim_ratio, f"<= {DIM_RATIO_MAX}", dim_ratio <= DIM_RATIO_MAX),
        ]

    def run_experiment(self) -> List[OversmoothingResult]:
        results = self.energy_separation() + self.complexity_scaling()
        for r in results:
            mark = "✅ PASS" if r.passed else "❌ FAIL"
            print(f"{mark} | {r.test_case} | {r.value:.3e} (expected {r.threshold})")
        return results


def main():
    """Run the experiment standalone"""
    configure_logging()
    print("🔬 Running Oversmoothing Experiment")
    print("=" * 80)
    results = OversmoothingExperiment().run_experiment()
    passed = sum(r.passed for r in results)
    print(f"\n📊 Passed: {passed}/{len(results)}")
    sys.exit(0 if passed == len(results) else 1)


if __name__ == "__main__":
    main()
