"""
Undirected weighted graphs in CSR form, symmetric normalization and the
sparse-dense product every layer is built on.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence
import logging

import numpy as np
import scipy.sparse as sp

from guards.input import as_matrix, check_rows
from helper import (
    DimensionMismatch,
    DuplicateEdgeConflict,
    EmptyEdgeSet,
    IndexOutOfRange,
    IsolatedNodeInPlainMode,
    SelfLoopRejected,
)

logger = logging.getLogger(__name__)


class NormalizationMode(Enum):
    PLAIN = "plain"
    AUGMENTED = "augmented"


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected weighted graph. Both directions are stored, columns sorted per row."""
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray

    @property
    def num_entries(self) -> int:
        """Directed entry count (each undirected edge counted twice)."""
        return int(self.indices.shape[0])

    @property
    def num_edges(self) -> int:
        return self.num_entries // 2

    def adjacency(self) -> sp.csr_array:
        return sp.csr_array((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    def undirected_edges(self):
        """ Returns (i, j, w) arrays with i < j, one row per undirected edge. """
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        upper = rows < self.indices
        return rows[upper], self.indices[upper], self.weights[upper]


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetric-normalized operator 𝓐 with the same CSR layout as Graph."""
    n: int
    mode: NormalizationMode
    matrix: sp.csr_array

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_graph(edge_list: Sequence, n: int) -> Graph:
    """
    Builds a Graph from (i, j, weight) triples. Each undirected edge may be listed
    once or in both directions; repeated pairs must agree on their weight.
    """
    if n < 0:
        raise IndexOutOfRange(f"node count must be non-negative, got {n}")
    triples = np.asarray(edge_list, dtype=np.float64)
    if triples.size == 0:
        triples = triples.reshape(0, 3)
    if triples.ndim != 2 or triples.shape[1] != 3:
        raise DimensionMismatch(f"edge list must hold (i, j, weight) triples, got shape {triples.shape}")

    src, dst, weight = triples[:, 0], triples[:, 1], triples[:, 2]
    if np.any(src != np.floor(src)) or np.any(dst != np.floor(dst)):
        raise IndexOutOfRange("node indices must be integers")
    bad = (src < 0) | (src >= n) | (dst < 0) | (dst >= n)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise IndexOutOfRange(f"edge ({src[k]:.0f}, {dst[k]:.0f}) references a node outside [0, {n})")
    src = src.astype(np.int64)
    dst = dst.astype(np.int64)
    loops = src == dst
    if np.any(loops):
        k = int(np.argmax(loops))
        raise SelfLoopRejected(f"self-loop on node {src[k]} (augmentation happens at normalization time)")
    if not np.all(np.isfinite(weight)) or np.any(weight <= 0):
        raise DimensionMismatch("edge weights must be finite and > 0")

    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    order = np.lexsort((hi, lo))
    lo, hi, weight = lo[order], hi[order], weight[order]
    same_pair = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
    conflict = same_pair & (weight[1:] != weight[:-1])
    if np.any(conflict):
        k = int(np.argmax(conflict))
        raise DuplicateEdgeConflict(
            f"edge ({lo[k]}, {hi[k]}) listed with weights {weight[k]!r} and {weight[k + 1]!r}"
        )
    keep = np.concatenate(([True], ~same_pair)) if lo.size else np.zeros(0, dtype=bool)
    lo, hi, weight = lo[keep], hi[keep], weight[keep]

    rows = np.concatenate((lo, hi))
    cols = np.concatenate((hi, lo))
    vals = np.concatenate((weight, weight))
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    degrees = np.bincount(rows, weights=vals, minlength=n).astype(np.float64)
    indices = cols.astype(np.int64)
    vals = vals.astype(np.float64)
    _freeze(indptr, indices, vals, degrees)
    return Graph(n=int(n), indptr=indptr, indices=indices, weights=vals, degrees=degrees)


def normalize(g: Graph, mode=NormalizationMode.AUGMENTED) -> NormalizedAdjacency:
    """
    Symmetric normalization. Plain: a_ij / sqrt(d_i d_j). Augmented: unit self-loops
    are added first and every degree becomes 1 + d_i.
    """
    mode = NormalizationMode(mode)
    if mode is NormalizationMode.PLAIN:
        isolated = np.flatnonzero(g.degrees == 0)
        if isolated.size:
            raise IsolatedNodeInPlainMode(
                f"{isolated.size} isolated node(s) (first: {isolated[0]}); use augmented normalization"
            )
        operator = g.adjacency().copy()
        scale = g.degrees
    else:
        operator = g.adjacency() + sp.eye_array(g.n, format="csr")
        scale = g.degrees + 1.0

    operator = sp.csr_array(operator)
    operator.sort_indices()
    rows = np.repeat(np.arange(g.n), np.diff(operator.indptr))
    data = operator.data / np.sqrt(scale[rows] * scale[operator.indices])
    matrix = sp.csr_array((data, operator.indices.copy(), operator.indptr.copy()), shape=(g.n, g.n))
    return NormalizedAdjacency(n=g.n, mode=mode, matrix=matrix)


def spmm(adj: NormalizedAdjacency, x) -> np.ndarray:
    """
    Exact CSR product 𝓐x. Each output row accumulates its stored entries in
    ascending column order, so results are bit-stable across runs.
    """
    x = as_matrix(x, "x", allow_vector=True)
    if x.shape[0] != adj.n:
        raise DimensionMismatch(f"x has {x.shape[0]} rows but the operator has {adj.n} nodes")
    return adj.matrix @ np.ascontiguousarray(x)


def homophily_ratio(g: Graph, labels) -> float:
    """Edge homophily: the fraction of undirected edges whose endpoints share a label."""
    labels = np.asarray(labels)
    check_rows(labels, g.n, "labels")
    i, j, _ = g.undirected_edges()
    if i.size == 0:
        raise EmptyEdgeSet("homophily is undefined on a graph without edges")
    return float(np.mean(labels[i] == labels[j]))
