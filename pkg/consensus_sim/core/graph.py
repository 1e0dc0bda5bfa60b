"""Directed weighted graphs: neighbor sets, reachability, spanning trees and unions.

Edge convention: a positive weight ``a_ij`` encodes the edge (v_j, v_i), i.e.
agent i can receive information from agent j. Traversal therefore walks from
j to every i with ``a_ij > 0``.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np


logger = logging.getLogger(__name__)


class GraphError(Exception):
    """Base exception for graph operations."""
    pass


class VertexIndexError(GraphError):
    """Raised when a vertex index is out of range."""
    pass


class GraphMismatchError(GraphError):
    """Raised when graphs of different sizes are combined."""
    pass


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    """Weighted digraph G(A) over n vertices.

    Args:
        weights: n x n nonnegative matrix with zero diagonal
        weight_bounds: (a_min, a_max) every nonzero weight must respect;
            derived from the weights when omitted
    """
    weights: np.ndarray
    weight_bounds: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"weights must be a square matrix, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.weight_bounds is None:
            nonzero = w[w > 0]
            bounds = (float(nonzero.min()), float(nonzero.max())) if nonzero.size else (1.0, 1.0)
            object.__setattr__(self, "weight_bounds", bounds)
        self.validate()

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def validate(self) -> None:
        """Check nonnegativity, absence of self-loops and weight bounds.

        Raises:
            GraphError: On the first violated invariant
        """
        w = self.weights
        if np.any(w < 0):
            raise GraphError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise GraphError("weights must have a zero diagonal (no self-loops)")
        a_min, a_max = self.weight_bounds
        if not 0 < a_min <= a_max:
            raise GraphError(f"weight bounds must satisfy 0 < a_min <= a_max, got {self.weight_bounds}")
        nonzero = w[w > 0]
        if nonzero.size and (nonzero.min() < a_min or nonzero.max() > a_max):
            raise GraphError(f"nonzero weights must lie in [{a_min}, {a_max}]")

    def edges(self) -> Set[Tuple[int, int]]:
        """Edge set as (source j, target i) pairs."""
        targets, sources = np.nonzero(self.weights > 0)
        return {(int(j), int(i)) for i, j in zip(targets, sources)}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]],
                   weight: float = 1.0) -> "DirectedWeightedGraph":
        """Build a graph from (source, target) pairs with a uniform weight."""
        w = np.zeros((n, n))
        for j, i in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise VertexIndexError(f"edge ({j}, {i}) outside 0..{n - 1}")
            w[i, j] = weight
        return cls(w)

    @classmethod
    def empty(cls, n: int) -> "DirectedWeightedGraph":
        return cls(np.zeros((n, n)))


def _check_vertex(n: int, i: int) -> None:
    if not 0 <= i < n:
        raise VertexIndexError(f"vertex {i} out of range 0..{n - 1}")


def neighbors(g: DirectedWeightedGraph, i: int) -> FrozenSet[int]:
    """Vertices j with an edge (v_j, v_i), excluding i itself."""
    _check_vertex(g.n, i)
    row = g.weights[i]
    return frozenset(int(j) for j in np.nonzero(row > 0)[0] if j != i)


def reachable(pattern: np.ndarray, root: int) -> Set[int]:
    """Vertices reachable from ``root`` in the graph of a nonnegative matrix.

    Uses an iterative depth-first traversal over edges j -> i for
    ``pattern[i, j] > 0``.
    """
    positive = np.asarray(pattern) > 0
    n = positive.shape[0]
    _check_vertex(n, root)
    seen = {root}
    stack = [root]
    while stack:
        j = stack.pop()
        for i in np.nonzero(positive[:, j])[0]:
            i = int(i)
            if i not in seen:
                seen.add(i)
                stack.append(i)
    return seen


def spanning_tree_root(pattern: np.ndarray, candidates: Optional[Iterable[int]] = None) -> Optional[int]:
    """Smallest candidate root that reaches every vertex, or None."""
    n = np.asarray(pattern).shape[0]
    for r in (range(n) if candidates is None else sorted(candidates)):
        if len(reachable(pattern, r)) == n:
            return r
    return None


def has_spanning_tree(g: DirectedWeightedGraph) -> Optional[int]:
    """Root of a directed spanning tree of g, smallest index first; None if absent."""
    return spanning_tree_root(g.weights)


def is_strongly_connected(g: DirectedWeightedGraph) -> bool:
    return all(len(reachable(g.weights, r)) == g.n for r in range(g.n))


def union(gs: Sequence[DirectedWeightedGraph]) -> DirectedWeightedGraph:
    """Union of edge sets; overlapping edges keep the largest weight.

    Raises:
        GraphError: If gs is empty
        GraphMismatchError: If the graphs have different vertex counts
    """
    if not gs:
        raise GraphError("union of an empty sequence of graphs")
    n = gs[0].n
    for g in gs[1:]:
        if g.n != n:
            raise GraphMismatchError(f"cannot unite graphs with {n} and {g.n} vertices")
    weights = np.maximum.reduce([g.weights for g in gs])
    lows: List[float] = [g.weight_bounds[0] for g in gs]
    highs: List[float] = [g.weight_bounds[1] for g in gs]
    return DirectedWeightedGraph(weights, (min(lows), max(highs)))


def in_gamma_s(a: np.ndarray) -> bool:
    """True iff G(a) has a spanning tree whose root carries a self-loop.

    Self-loops count here, unlike in the reception topology.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError(f"expected a square matrix, got shape {a.shape}")
    looped = [int(r) for r in np.nonzero(np.diag(a) > 0)[0]]
    return spanning_tree_root(a, looped) is not None


def normalized_lower_bound(g: DirectedWeightedGraph) -> float:
    """Strict lower bound a_min / ((n - 1) a_max) on nonzero normalized weights."""
    if g.n < 2:
        return 1.0
    a_min, a_max = g.weight_bounds
    return a_min / ((g.n - 1) * a_max)
