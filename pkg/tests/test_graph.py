"""Tests for directed weighted graphs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from consensus_sim.core.graph import (
    DirectedWeightedGraph, GraphError, GraphMismatchError, VertexIndexError, has_spanning_tree,
    in_gamma_s, is_strongly_connected, neighbors, normalized_lower_bound, reachable, union,
)
from consensus_sim.core.matrices import normalize_weights


def weight_matrices(max_n: int = 6):
    """Nonnegative square weight matrices with zero diagonal."""
    def zero_diagonal(w):
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        return w

    return st.integers(min_value=1, max_value=max_n).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.sampled_from([0.0, 0.0, 0.5, 1.0, 2.0]))
    ).map(zero_diagonal)


def brute_force_reach(w: np.ndarray, root: int) -> set:
    n = w.shape[0]
    reach = {root}
    for _ in range(n):
        reach |= {i for i in range(n) for j in reach if w[i, j] > 0}
    return reach


class TestDirectedWeightedGraph:
    """Construction and validation."""

    def test_weights_are_copied_and_read_only(self):
        w = np.array([[0.0, 1.0], [0.0, 0.0]])
        g = DirectedWeightedGraph(w)
        w[0, 1] = 5.0
        assert g.weights[0, 1] == 1.0
        with pytest.raises(ValueError):
            g.weights[0, 1] = 3.0

    def test_bounds_derived_from_weights(self):
        g = DirectedWeightedGraph(np.array([[0, 2, 3], [1, 0, 0], [0, 0, 0]], dtype=float))
        assert g.weight_bounds == (1.0, 3.0)

    def test_empty_graph_has_unit_bounds(self):
        assert DirectedWeightedGraph.empty(3).weight_bounds == (1.0, 1.0)

    @pytest.mark.parametrize("weights", [
        [[0, -1], [0, 0]],
        [[1, 0], [0, 0]],
        [[0, 1, 0], [0, 0, 0]],
    ])
    def test_invalid_weights_rejected(self, weights):
        with pytest.raises(GraphError):
            DirectedWeightedGraph(np.array(weights, dtype=float))

    def test_weights_outside_bounds_rejected(self):
        with pytest.raises(GraphError, match="must lie in"):
            DirectedWeightedGraph(np.array([[0, 5.0], [1.0, 0]]), (1.0, 2.0))

    def test_invalid_bounds_rejected(self):
        with pytest.raises(GraphError, match="weight bounds"):
            DirectedWeightedGraph(np.zeros((2, 2)), (0.0, 1.0))

    def test_edges_are_source_target_pairs(self, example_graph):
        # a_12 > 0 means agent 1 hears agent 2: edge (v_2, v_1).
        assert (1, 0) in example_graph.edges()
        assert (0, 1) in example_graph.edges()
        assert (3, 2) not in example_graph.edges()

    def test_from_edges(self):
        g = DirectedWeightedGraph.from_edges(3, [(0, 1), (1, 2)], weight=2.0)
        assert g.weights[1, 0] == 2.0
        assert g.weights[2, 1] == 2.0
        assert g.edges() == {(0, 1), (1, 2)}

    def test_from_edges_rejects_bad_vertex(self):
        with pytest.raises(VertexIndexError):
            DirectedWeightedGraph.from_edges(2, [(0, 2)])


class TestNeighbors:
    """Neighbor sets N_i."""

    def test_example_agent_one(self, example_graph):
        assert neighbors(example_graph, 0) == {1, 2}

    def test_zero_matrix(self):
        g = DirectedWeightedGraph.empty(4)
        assert all(neighbors(g, i) == frozenset() for i in range(4))

    def test_out_of_range(self, example_graph):
        with pytest.raises(VertexIndexError):
            neighbors(example_graph, 4)

    @given(weight_matrices())
    def test_matches_row_scan(self, w):
        g = DirectedWeightedGraph(w)
        for i in range(g.n):
            assert neighbors(g, i) == {j for j in range(g.n) if w[i, j] > 0}


class TestSpanningTree:
    """Reachability and spanning-tree roots."""

    def test_example_graph_has_root(self, example_graph):
        root = has_spanning_tree(example_graph)
        assert root is not None
        assert reachable(example_graph.weights, root) == {0, 1, 2, 3}

    def test_single_vertex(self):
        assert has_spanning_tree(DirectedWeightedGraph.empty(1)) == 0

    def test_two_isolated_vertices(self):
        assert has_spanning_tree(DirectedWeightedGraph.empty(2)) is None

    def test_smallest_root_wins(self):
        g = DirectedWeightedGraph.from_edges(3, [(0, 1), (1, 0), (1, 2)])
        assert has_spanning_tree(g) == 0

    def test_strong_connectivity(self, example_graph):
        assert not is_strongly_connected(example_graph)
        ring = DirectedWeightedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
        assert is_strongly_connected(ring)

    @given(weight_matrices())
    def test_root_matches_brute_force(self, w):
        g = DirectedWeightedGraph(w)
        roots = [r for r in range(g.n) if len(brute_force_reach(w, r)) == g.n]
        assert has_spanning_tree(g) == (roots[0] if roots else None)


class TestUnion:
    """Unions of graphs."""

    def test_disjoint_edges(self):
        a = DirectedWeightedGraph.from_edges(2, [(0, 1)])
        b = DirectedWeightedGraph.from_edges(2, [(1, 0)])
        assert union([a, b]).edges() == {(0, 1), (1, 0)}

    def test_idempotent(self, example_graph):
        assert union([example_graph, example_graph]).edges() == example_graph.edges()

    def test_overlapping_edges_keep_largest_weight(self):
        a = DirectedWeightedGraph.from_edges(2, [(0, 1)], weight=1.0)
        b = DirectedWeightedGraph.from_edges(2, [(0, 1)], weight=3.0)
        u = union([a, b])
        assert u.weights[1, 0] == 3.0
        assert u.weight_bounds == (1.0, 3.0)

    def test_empty_sequence(self):
        with pytest.raises(GraphError):
            union([])

    def test_size_mismatch(self):
        with pytest.raises(GraphMismatchError):
            union([DirectedWeightedGraph.empty(2), DirectedWeightedGraph.empty(3)])

    @given(st.integers(min_value=1, max_value=5).flatmap(
        lambda n: st.lists(arrays(np.bool_, (n, n)), min_size=1, max_size=3)))
    def test_matches_entrywise_or(self, patterns):
        graphs = []
        for p in patterns:
            w = p.astype(float)
            np.fill_diagonal(w, 0.0)
            graphs.append(DirectedWeightedGraph(w))
        expected = set().union(*(g.edges() for g in graphs))
        assert union(graphs).edges() == expected

    @given(weight_matrices(4), weight_matrices(4))
    @settings(max_examples=50)
    def test_commutative_where_sizes_match(self, a, b):
        if a.shape != b.shape:
            return
        ga, gb = DirectedWeightedGraph(a), DirectedWeightedGraph(b)
        assert union([ga, gb]).edges() == union([gb, ga]).edges()


class TestGammaS:
    """Spanning tree rooted at a self-looped vertex."""

    def test_identity_is_not_in_gamma_s(self):
        assert not in_gamma_s(np.eye(2))

    def test_looped_root(self):
        assert in_gamma_s(np.array([[1.0, 1.0], [1.0, 0.0]]))

    def test_loop_on_wrong_vertex(self):
        # Only v_1 reaches everything, and the loop sits on v_2.
        a = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert not in_gamma_s(a)

    def test_rejects_non_square(self):
        with pytest.raises(GraphError):
            in_gamma_s(np.ones((2, 3)))

    @given(arrays(np.bool_, (4, 4)))
    def test_matches_root_enumeration(self, pattern):
        a = pattern.astype(float)
        expected = any(a[r, r] > 0 and len(brute_force_reach(a, r)) == 4 for r in range(4))
        assert in_gamma_s(a) == expected


class TestNormalizedLowerBound:
    """Lower bound on nonzero normalized weights."""

    def test_single_agent(self):
        assert normalized_lower_bound(DirectedWeightedGraph.empty(1)) == 1.0

    def test_example_graph(self, example_graph):
        assert normalized_lower_bound(example_graph) == pytest.approx(1.0 / 3.0)

    @given(weight_matrices(), st.data())
    def test_bounds_every_normalized_weight(self, w, data):
        g = DirectedWeightedGraph(w)
        bound = normalized_lower_bound(g)
        for i in range(g.n):
            nbrs = sorted(neighbors(g, i))
            if not nbrs:
                continue
            received = data.draw(st.sets(st.sampled_from(nbrs), min_size=1))
            row = normalize_weights(g, received, i)
            assert all(row[j] >= bound for j in received)
