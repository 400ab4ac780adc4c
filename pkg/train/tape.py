"""
Reverse-mode differentiation over the fixed set of operations an IRC network needs.

Every operation appends one entry holding its backward rule; backward() walks the
entries in exact reverse order and accumulates gradients by addition, so a node
used twice receives the sum of both contributions.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, logsumexp, softmax

from graph.core import NormalizedAdjacency
from helper import DEFAULT_SLOPE, DimensionMismatch, EmptyMask, TapeConsumed, UsageError
from model.propagate import Activation, apply_activation


@dataclass(eq=False)
class Node:
    value: np.ndarray
    index: int
    requires_grad: bool
    name: Optional[str] = None

    @property
    def shape(self):
        return self.value.shape


@dataclass
class TapeEntry:
    op: str
    inputs: Tuple[int, ...]
    output: int
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    def __init__(self):
        self.nodes: List[Node] = []
        self.entries: List[TapeEntry] = []
        self.consumed = False

    @property
    def ops(self) -> List[str]:
        return [entry.op for entry in self.entries]

    def _node(self, value, requires_grad: bool, name: Optional[str] = None) -> Node:
        node = Node(value=np.asarray(value, dtype=np.float64), index=len(self.nodes),
                    requires_grad=requires_grad, name=name)
        self.nodes.append(node)
        return node

    def constant(self, value, name: Optional[str] = None) -> Node:
        return self._node(value, False, name)

    def parameter(self, value, name: str) -> Node:
        return self._node(value, True, name)

    def _record(self, op: str, inputs: Sequence[Node], value, backward) -> Node:
        requires_grad = any(node.requires_grad for node in inputs)
        out = self._node(value, requires_grad)
        if requires_grad:
            self.entries.append(TapeEntry(op, tuple(node.index for node in inputs), out.index, backward))
        return out

    # operations

    def spmm(self, adj: NormalizedAdjacency, x: Node) -> Node:
        if x.shape[0] != adj.n:
            raise DimensionMismatch(f"x has {x.shape[0]} rows but the operator has {adj.n} nodes")
        matrix = adj.matrix
        return self._record("spmm", [x], matrix @ x.value, lambda g: (matrix.T @ g,))

    def matmul(self, a: Node, b: Node) -> Node:
        if a.shape[-1] != b.shape[0]:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        av, bv = a.value, b.value
        return self._record("matmul", [a, b], av @ bv, lambda g: (g @ bv.T, av.T @ g))

    def matvec(self, a: Node, v: Node) -> Node:
        if a.shape[-1] != v.shape[0]:
            raise DimensionMismatch(f"cannot multiply {a.shape} by a vector of length {v.shape[0]}")
        av, vv = a.value, v.value
        return self._record("matvec", [a, v], av @ vv, lambda g: (np.outer(g, vv), av.T @ g))

    def row_scale(self, s: Node, x: Node) -> Node:
        """diag(s) @ x."""
        sv, xv = s.value, x.value
        return self._record(
            "row_scale", [s, x], sv[:, None] * xv,
            lambda g: (np.sum(g * xv, axis=1), sv[:, None] * g),
        )

    def add(self, a: Node, b: Node) -> Node:
        if a.shape != b.shape:
            raise DimensionMismatch(f"cannot add {a.shape} and {b.shape}")
        return self._record("add", [a, b], a.value + b.value, lambda g: (g, g))

    def add_bias(self, x: Node, b: Node) -> Node:
        return self._record("add_bias", [x, b], x.value + b.value, lambda g: (g, g.sum(axis=0)))

    def one_minus(self, x: Node) -> Node:
        return self._record("one_minus", [x], 1.0 - x.value, lambda g: (-g,))

    def activation(self, x: Node, activation=Activation.RELU, slope: float = DEFAULT_SLOPE) -> Node:
        activation = Activation(activation)
        xv = x.value
        out = apply_activation(xv, activation, slope)
        if activation is Activation.RELU:
            local = (xv > 0).astype(np.float64)
        elif activation is Activation.LEAKY_RELU:
            local = np.where(xv > 0, 1.0, slope)
        elif activation is Activation.SIGMOID:
            local = out * (1.0 - out)
        else:
            local = None
        return self._record(activation.value, [x], out, lambda g: (g if local is None else g * local,))

    def logistic(self, x: Node) -> Node:
        y = expit(x.value)
        return self._record("logistic", [x], y, lambda g: (g * y * (1.0 - y),))

    def clamp(self, x: Node, lo: float, hi: float) -> Node:
        xv = x.value
        inside = (xv > lo) & (xv < hi)
        return self._record("clamp", [x], np.clip(xv, lo, hi), lambda g: (np.where(inside, g, 0.0),))

    def dropout(self, x: Node, rate: float, rng: Optional[np.random.Generator], training: bool) -> Node:
        """Inverted dropout; the mask is kept so backward replays it exactly."""
        if not 0.0 <= rate < 1.0:
            raise UsageError(f"dropout rate must lie in [0, 1), got {rate}")
        if not training or rate == 0.0:
            return x
        if rng is None:
            raise UsageError("training-mode dropout needs a generator")
        mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
        return self._record("dropout", [x], x.value * mask, lambda g: (g * mask,))

    def log_softmax(self, x: Node) -> Node:
        xv = x.value
        out = xv - logsumexp(xv, axis=1, keepdims=True)
        probs = softmax(xv, axis=1)
        return self._record(
            "log_softmax", [x], out,
            lambda g: (g - probs * g.sum(axis=1, keepdims=True),),
        )

    def masked_nll(self, logp: Node, labels: np.ndarray, mask: np.ndarray) -> Node:
        """Mean negative log-likelihood over the masked rows."""
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            raise EmptyMask("loss mask selects no nodes")
        cols = np.asarray(labels)[rows]
        loss = -np.mean(logp.value[rows, cols])

        def backward(g):
            grad = np.zeros_like(logp.value)
            grad[rows, cols] = -g / rows.size
            return (grad,)

        return self._record("masked_nll", [logp], loss, backward)

    def backward(self, output: Node, seed=None) -> Dict[str, np.ndarray]:
        """
        Returns:
            gradient per named parameter; parameters the output does not reach get zeros
        Raises:
            TapeConsumed: backward already ran on this tape
        """
        if self.consumed:
            raise TapeConsumed("backward already ran on this tape; run a new forward pass")
        self.consumed = True

        grads: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        grads[output.index] = np.ones_like(output.value) if seed is None else np.asarray(seed, dtype=np.float64)
        for entry in reversed(self.entries):
            upstream = grads[entry.output]
            if upstream is None:
                continue
            for index, grad in zip(entry.inputs, entry.backward(upstream)):
                if grad is None or not self.nodes[index].requires_grad:
                    continue
                grads[index] = grad if grads[index] is None else grads[index] + grad

        return {
            node.name: np.zeros_like(node.value) if grads[node.index] is None else grads[node.index]
            for node in self.nodes
            if node.requires_grad and node.name is not None
        }
