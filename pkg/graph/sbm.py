from dataclasses import dataclass
from typing import Tuple
import logging

import numpy as np

from graph.core import Graph, build_graph
from helper import InvalidFraction, UsageError, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SbmParams:
    """Two-class stochastic block model with Gaussian node features."""
    n: int = 200
    p: float = 0.2
    q: float = 0.05
    mu1: float = -0.5
    mu2: float = 0.5
    std: float = 2.0
    dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise UsageError(f"SBM node count must be a positive even number, got {self.n}")
        if not 0.0 <= self.q <= self.p <= 1.0:
            raise InvalidFraction(f"SBM needs 0 <= q <= p <= 1, got p={self.p}, q={self.q}")
        if not self.std > 0:
            raise UsageError(f"feature std must be > 0, got {self.std}")
        if self.dim < 1:
            raise UsageError(f"feature dimension must be >= 1, got {self.dim}")


def sbm_generate(params: SbmParams) -> Tuple[Graph, np.ndarray, np.ndarray]:
    """
    Samples an SBM graph with features. Nodes 0..n/2-1 form class 0. Every unordered
    pair is drawn independently (p inside a class, q across); isolated nodes are kept.
    Returns:
        (graph, features n x dim, labels)
    """
    rng = make_rng(params.seed)
    n = params.n
    labels = np.repeat(np.arange(2), n // 2)

    src, dst = np.triu_indices(n, k=1)
    probability = np.where(labels[src] == labels[dst], params.p, params.q)
    chosen = rng.random(src.shape[0]) < probability
    edges = np.column_stack((src[chosen], dst[chosen], np.ones(int(chosen.sum()))))
    graph = build_graph(edges, n)

    means = np.where(labels == 0, params.mu1, params.mu2)[:, None]
    features = means + params.std * rng.standard_normal((n, params.dim))

    isolated = int(np.sum(graph.degrees == 0))
    if isolated:
        logger.warning(f"SBM sample has {isolated} isolated node(s); use augmented normalization")
    logger.debug(f"SBM sample: n={n}, edges={graph.num_edges}, seed={params.seed}")
    return graph, features, labels


def random_edge_graph(n: int, num_edges: int, seed: int) -> Graph:
    """Uniformly random simple graph with exactly num_edges undirected edges."""
    capacity = n * (n - 1) // 2
    if num_edges > capacity:
        raise UsageError(f"{num_edges} edges do not fit in a simple graph on {n} nodes")
    rng = make_rng(seed)
    keys = np.zeros(0, dtype=np.int64)
    while keys.size < num_edges:
        draw = max(2 * (num_edges - keys.size), 16)
        src = rng.integers(0, n, size=draw)
        dst = rng.integers(0, n, size=draw)
        proper = src != dst
        lo = np.minimum(src, dst)[proper]
        hi = np.maximum(src, dst)[proper]
        candidates = np.concatenate((keys, lo * n + hi))
        _, first = np.unique(candidates, return_index=True)
        keys = candidates[np.sort(first)][:num_edges]
    edges = np.column_stack((keys // n, keys % n, np.ones(num_edges)))
    return build_graph(edges, n)
