"""Graph generation, PageRank, enumeration, and correlation analytics.

PageRank is checked against a direct linear-system solve; enumeration
counts against an independent union-find connectivity filter; the
correlation value against hand arithmetic.
"""

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moldbo.graphmold import (
    CenterOutOfRangeError,
    DegenerateInputError,
    EmptyCenterError,
    GraphError,
    MoldedGraph,
    NotConnectedError,
    TooLargeError,
    attach_global_node,
    ba_biased,
    complete_graph,
    count_connected_graphs,
    enumerate_connected_graphs,
    graph_from_dict,
    graph_to_dict,
    is_connected,
    pagerank,
    pearson,
)


def pagerank_linear_oracle(graph, d=0.85):
    """Solve (I - d M) pr = (1-d)/n 1 directly instead of iterating."""
    n = graph.n
    deg = graph.degrees().astype(float)
    m = graph.adjacency().astype(float) / deg[np.newaxis, :]
    return np.linalg.solve(np.eye(n) - d * m, np.full(n, (1.0 - d) / n))


def connected_by_union_find(n, edges):
    """Independent connectivity check used to validate enumeration."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(v) for v in range(n)}) == 1


def random_connected_graph(n, rng):
    """Rejection-sample a connected graph on n nodes."""
    pairs = list(combinations(range(n), 2))
    while True:
        keep = [p for p in pairs if rng.random() < 0.5]
        if is_connected(n, keep):
            return MoldedGraph(n, keep)


class TestMoldedGraph:
    def test_edges_are_canonical(self):
        g = MoldedGraph(3, [(2, 0), (1, 2)])
        assert g.edges == ((0, 2), (1, 2))

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            MoldedGraph(3, [(1, 1)])

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(GraphError):
            MoldedGraph(3, [(0, 3)])

    def test_duplicate_edge_rejected(self):
        with pytest.raises(GraphError):
            MoldedGraph(3, [(0, 1), (1, 0)])

    def test_degrees_and_neighbors(self):
        g = MoldedGraph(4, [(0, 1), (0, 2), (0, 3)])
        np.testing.assert_array_equal(g.degrees(), [3, 1, 1, 1])
        assert sorted(g.neighbors(0)) == [1, 2, 3]
        assert g.neighbors(2) == [0]

    def test_dict_round_trip(self):
        g = MoldedGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4)], centered=(1, 2))
        payload = graph_to_dict(g)
        assert payload == {
            "n": 5,
            "edges": [[0, 1], [1, 2], [2, 3], [3, 4]],
            "centered": [1, 2],
        }
        assert graph_from_dict(payload) == g


class TestConnectivity:
    def test_path_is_connected(self):
        assert is_connected(3, [(0, 1), (1, 2)])

    def test_isolated_node_is_not(self):
        assert not is_connected(3, [(0, 1)])

    def test_complete_graph_is_connected(self):
        g = complete_graph(5)
        assert is_connected(g.n, g.edges)
        assert len(g.edges) == 10


class TestBaBiased:
    def test_two_centered_on_five_nodes(self):
        g = ba_biased(5, (0, 1), np.random.default_rng(0))
        assert len(g.edges) == 4
        assert (0, 1) in g.edges
        assert is_connected(g.n, g.edges)

    def test_single_center_gives_tree(self):
        g = ba_biased(7, (2,), np.random.default_rng(1))
        assert len(g.edges) == 6
        assert is_connected(g.n, g.edges)

    def test_centered_core_is_complete(self):
        g = ba_biased(9, (1, 4, 6), np.random.default_rng(2))
        for pair in combinations((1, 4, 6), 2):
            assert pair in g.edges

    def test_empty_center_rejected(self):
        with pytest.raises(EmptyCenterError):
            ba_biased(5, (), np.random.default_rng(0))

    def test_center_out_of_range_rejected(self):
        with pytest.raises(CenterOutOfRangeError):
            ba_biased(5, (5,), np.random.default_rng(0))

    def test_edge_count_identity_over_draws(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 21))
            size = int(rng.integers(1, n + 1))
            centered = rng.choice(n, size=size, replace=False)
            g = ba_biased(n, centered, rng)
            v = len(g.centered)
            assert len(g.edges) == v * (v - 1) // 2 + (n - v)
            assert is_connected(g.n, g.edges)

    def test_centered_nodes_attract_more_degree(self):
        rng = np.random.default_rng(11)
        centered_total = 0.0
        outer_total = 0.0
        for _ in range(1000):
            deg = ba_biased(20, (0, 1, 2), rng).degrees()
            centered_total += deg[:3].mean()
            outer_total += deg[3:].mean()
        assert centered_total > outer_total

    def test_same_seed_same_graph(self):
        a = ba_biased(12, (3, 5), np.random.default_rng(42))
        b = ba_biased(12, (3, 5), np.random.default_rng(42))
        assert a == b

    @settings(max_examples=60)
    @given(st.integers(2, 12), st.data())
    def test_every_outer_node_has_degree_one_at_attachment(self, n, data):
        size = data.draw(st.integers(1, n))
        centered = data.draw(
            st.lists(
                st.integers(0, n - 1), min_size=size, max_size=size, unique=True
            )
        )
        g = ba_biased(n, centered, np.random.default_rng(data.draw(st.integers(0, 999))))
        deg = g.degrees()
        for v in range(n):
            if v not in g.centered:
                outer_edges = [e for e in g.edges if v in e]
                assert len(outer_edges) >= 1


class TestGlobalNode:
    def test_readout_degrees(self):
        g = MoldedGraph(3, [(0, 1), (1, 2)])
        a = attach_global_node(g)
        assert a.shape == (4, 4)
        assert a[:3, 3].sum() == 3
        assert a[3, :].sum() == 0

    def test_original_adjacency_preserved(self):
        g = MoldedGraph(4, [(0, 2), (1, 3)])
        a = attach_global_node(g)
        np.testing.assert_array_equal(a[:4, :4], g.adjacency())

    def test_directed_edge_count_for_k2(self):
        a = attach_global_node(complete_graph(2))
        assert a.sum() == 2 * 1 + 2


class TestPageRank:
    def test_complete_graph_is_uniform(self):
        pr = pagerank(complete_graph(4))
        np.testing.assert_allclose(pr, 0.25, atol=1e-9)

    def test_star_matches_linear_system(self):
        star = MoldedGraph(4, [(0, 1), (0, 2), (0, 3)])
        pr = pagerank(star)
        assert pr[0] == pytest.approx(0.4797, abs=1e-4)
        assert pr[1] == pytest.approx(0.1734, abs=1e-4)
        np.testing.assert_allclose(pr, pagerank_linear_oracle(star), atol=1e-8)

    def test_scores_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = random_connected_graph(int(rng.integers(2, 8)), rng)
            assert pagerank(g).sum() == pytest.approx(1.0, abs=1e-8)

    def test_matches_linear_system_on_random_graphs(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            g = random_connected_graph(int(rng.integers(3, 9)), rng)
            np.testing.assert_allclose(
                pagerank(g), pagerank_linear_oracle(g), atol=1e-6
            )

    def test_regular_graphs_are_uniform(self):
        ring = MoldedGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
        np.testing.assert_allclose(pagerank(ring), 0.2, atol=1e-9)

    def test_relabeling_permutes_scores(self):
        rng = np.random.default_rng(13)
        g = random_connected_graph(6, rng)
        perm = rng.permutation(6)
        relabeled = MoldedGraph(
            6, [(int(perm[i]), int(perm[j])) for i, j in g.edges]
        )
        pr = pagerank(g)
        pr_rel = pagerank(relabeled)
        np.testing.assert_allclose(pr_rel[perm], pr, atol=1e-9)

    def test_disconnected_rejected(self):
        with pytest.raises(NotConnectedError):
            pagerank(MoldedGraph(4, [(0, 1), (2, 3)]))

    def test_scores_positive(self):
        g = MoldedGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        assert np.all(pagerank(g) > 0)


class TestEnumeration:
    def test_known_counts(self):
        assert count_connected_graphs(2) == 1
        assert count_connected_graphs(3) == 4
        assert count_connected_graphs(4) == 38

    def test_matches_union_find_filter(self):
        for n in (2, 3, 4, 5):
            pairs = list(combinations(range(n), 2))
            expected = 0
            for mask in range(2 ** len(pairs)):
                edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
                if connected_by_union_find(n, edges):
                    expected += 1
            assert count_connected_graphs(n) == expected

    def test_no_duplicates(self):
        seen = {g.edges for g in enumerate_connected_graphs(4)}
        assert len(seen) == 38

    def test_all_results_connected(self):
        for g in enumerate_connected_graphs(4):
            assert is_connected(g.n, g.edges)

    def test_guard_rails(self):
        with pytest.raises(TooLargeError):
            list(enumerate_connected_graphs(7))
        with pytest.raises(TooLargeError):
            list(enumerate_connected_graphs(1))


class TestPearson:
    def test_perfect_positive(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        x = [1.0, 2.0, 3.0]
        assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)

    def test_hand_value(self):
        # direct formula: cov 1, std_x sqrt(2/3)... collapses to 3/sqrt(21)
        assert pearson([1, 2, 3], [2, 1, 4]) == pytest.approx(
            3.0 / math.sqrt(21.0), abs=1e-5
        )
        assert pearson([1, 2, 3], [2, 1, 4]) == pytest.approx(0.65465, abs=1e-5)

    def test_constant_input_rejected(self):
        with pytest.raises(DegenerateInputError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(DegenerateInputError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_short_input_rejected(self):
        with pytest.raises(DegenerateInputError):
            pearson([1.0], [2.0])

    def test_bounded(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            x = rng.normal(size=6)
            y = rng.normal(size=6)
            assert -1.0 <= pearson(x, y) <= 1.0
