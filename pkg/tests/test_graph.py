import random

import numpy as np
import pytest

from corpus_select.graph import (
    PageRankConfig,
    SimilarityGraph,
    build_graph,
    dump_edges,
    pagerank,
    rank_nodes,
)


def linear_solve_scores(edges, node_count, damping):
    """Dense fixed-point solve of the score equation, built by plain loops."""
    weights = np.zeros((node_count, node_count))
    for i, j, w in edges:
        weights[i, j] = w
        weights[j, i] = w
    coeff = np.zeros((node_count, node_count))
    for j in range(node_count):
        out_weight = weights[j].sum()
        if out_weight > 0:
            for i in range(node_count):
                coeff[i, j] = weights[j, i] / out_weight
    system = np.eye(node_count) - damping * coeff
    return np.linalg.solve(system, (1.0 - damping) * np.ones(node_count))


def random_graph(rng, node_count, edge_count, ensure_isolated=False):
    edges = {}
    isolated = {node_count - 1} if ensure_isolated else set()
    while len(edges) < edge_count:
        i = rng.randrange(node_count)
        j = rng.randrange(node_count)
        if i == j or i in isolated or j in isolated:
            continue
        key = (min(i, j), max(i, j))
        edges[key] = rng.uniform(0.05, 1.0)
    return [(i, j, w) for (i, j), w in edges.items()]


class TestBuildGraph:
    def test_symmetrizes(self):
        graph = build_graph([(0, 1, 0.9)], 2, threshold=0.5)
        assert graph.edge_list() == [(0, 1, 0.9)]
        assert graph.weights[1, 0] == 0.9
        assert graph.weights[0, 1] == 0.9

    def test_drops_self_loops(self):
        graph = build_graph([(0, 0, 1.0)], 1)
        assert graph.edge_count == 0

    def test_threshold_filters(self):
        graph = build_graph([(0, 1, 0.4), (1, 2, 0.6)], 3, threshold=0.5)
        assert graph.edge_list() == [(1, 2, 0.6)]

    def test_duplicates_keep_maximum(self):
        rng = random.Random(91)
        triples = []
        for _ in range(100):
            i, j = rng.randrange(8), rng.randrange(8)
            triples.append((i, j, rng.uniform(0, 1)))
        graph = build_graph(triples, 8)
        oracle = {}
        for i, j, w in triples:
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            oracle[key] = max(oracle.get(key, 0.0), w)
        assert {(i, j): w for i, j, w in graph.edge_list()} == pytest.approx(oracle)

    def test_out_of_range_index(self):
        with pytest.raises(IndexError):
            build_graph([(0, 5, 1.0)], 3)

    def test_non_finite_score(self):
        with pytest.raises(ValueError):
            build_graph([(0, 1, float("nan"))], 2)


class TestPageRank:
    def test_single_isolated_node(self):
        result = pagerank(build_graph([], 1), PageRankConfig(damping=0.85))
        assert result.scores[0] == pytest.approx(0.15, abs=1e-9)
        assert result.converged

    def test_two_nodes_any_weight_score_one(self):
        for weight in (0.1, 1.0, 37.5):
            result = pagerank(build_graph([(0, 1, weight)], 2))
            assert result.scores == pytest.approx([1.0, 1.0], abs=1e-6)

    def test_four_node_fixture_matches_linear_solve(self):
        edges = [(0, 1, 0.9), (0, 2, 0.3), (1, 2, 0.5), (2, 3, 0.2)]
        config = PageRankConfig(tolerance=1e-10, max_iterations=500)
        result = pagerank(build_graph(edges, 4), config)
        expected = linear_solve_scores(edges, 4, config.damping)
        assert result.scores == pytest.approx(expected, abs=1e-6)

    def test_random_graphs_satisfy_fixed_point(self):
        rng = random.Random(92)
        for trial in range(5):
            n = rng.randrange(5, 21)
            edges = random_graph(rng, n, edge_count=2 * n, ensure_isolated=trial % 2 == 0)
            config = PageRankConfig(tolerance=1e-9, max_iterations=1000)
            result = pagerank(build_graph(edges, n), config)
            assert result.converged
            expected = linear_solve_scores(edges, n, config.damping)
            assert np.max(np.abs(result.scores - expected)) < 1e-5
            if trial % 2 == 0:
                assert result.scores[n - 1] == pytest.approx(
                    1 - config.damping, abs=1e-9
                )

    def test_residual_below_tolerance_on_convergence(self):
        rng = random.Random(93)
        edges = random_graph(rng, 12, 30)
        config = PageRankConfig(tolerance=1e-6)
        graph = build_graph(edges, 12)
        result = pagerank(graph, config)
        assert result.converged
        # re-apply one update step; the returned iterate must barely move
        weights = graph.weights.toarray()
        out = weights.sum(axis=1)
        rhs = np.full(12, 1 - config.damping)
        for i in range(12):
            for j in range(12):
                if weights[j, i] > 0:
                    rhs[i] += config.damping * weights[j, i] / out[j] * result.scores[j]
        assert np.max(np.abs(result.scores - rhs)) < 10 * config.tolerance

    def test_edge_weight_scale_invariance(self):
        rng = random.Random(94)
        edges = random_graph(rng, 10, 20)
        scaled = [(i, j, 123.0 * w) for i, j, w in edges]
        base = pagerank(build_graph(edges, 10)).scores
        other = pagerank(build_graph(scaled, 10)).scores
        assert other == pytest.approx(base, abs=1e-9)

    def test_permutation_equivariance(self):
        rng = random.Random(95)
        edges = random_graph(rng, 9, 16)
        perm = list(range(9))
        random.Random(96).shuffle(perm)
        relabeled = [(perm[i], perm[j], w) for i, j, w in edges]
        base = pagerank(build_graph(edges, 9)).scores
        moved = pagerank(build_graph(relabeled, 9)).scores
        assert [moved[perm[i]] for i in range(9)] == pytest.approx(
            list(base), abs=1e-9
        )

    def test_uniform_complete_graph_equal_scores(self):
        edges = [(i, j, 0.6) for i in range(6) for j in range(i + 1, 6)]
        result = pagerank(build_graph(edges, 6))
        assert result.scores == pytest.approx([1.0] * 6, abs=1e-5)

    def test_small_damping_band_on_regular_graph(self):
        # cycle: every node has two equal-weight edges, so the per-node
        # in-ratio sums are exactly 1 and scores sit in [1-d, 1-d+d]
        edges = [(i, (i + 1) % 8, 0.4) for i in range(8)]
        config = PageRankConfig(damping=0.001, tolerance=1e-9)
        scores = pagerank(build_graph(edges, 8), config).scores
        assert np.all(scores >= 0.999 - 1e-8)
        assert np.all(scores <= 0.999 + 0.001 + 1e-8)

    def test_small_damping_general_bound(self):
        # for arbitrary graphs the slack above 1-d scales with the largest
        # per-node sum of in-weight ratios, not with d alone
        rng = random.Random(97)
        edges = random_graph(rng, 8, 14)
        config = PageRankConfig(damping=0.001, tolerance=1e-9)
        graph = build_graph(edges, 8)
        scores = pagerank(graph, config).scores
        weights = graph.weights.toarray()
        out = weights.sum(axis=1)
        ratio_sums = [
            sum(weights[j, i] / out[j] for j in range(8) if weights[j, i] > 0)
            for i in range(8)
        ]
        upper = 0.999 + 0.001 * max(ratio_sums) * max(scores)
        assert np.all(scores >= 0.999 - 1e-8)
        assert np.all(scores <= upper + 1e-8)

    def test_non_convergence_returns_flagged_iterate(self):
        rng = random.Random(98)
        edges = random_graph(rng, 10, 25)
        result = pagerank(
            build_graph(edges, 10), PageRankConfig(tolerance=1e-12, max_iterations=2)
        )
        assert not result.converged
        assert result.iterations == 2
        assert np.all(np.isfinite(result.scores))

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            pagerank(SimilarityGraph(0, build_graph([], 1).weights[:0, :0]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PageRankConfig(damping=1.0)
        with pytest.raises(ValueError):
            PageRankConfig(tolerance=0.0)


class TestRankNodes:
    def test_tie_break(self):
        assert rank_nodes([0.2, 0.9, 0.2]) == [(1, 0.9), (0, 0.2), (2, 0.2)]

    def test_all_equal_is_identity_order(self):
        assert rank_nodes([1.0] * 4) == [(i, 1.0) for i in range(4)]

    def test_random_scores_match_sort_oracle(self):
        rng = np.random.default_rng(99)
        scores = rng.random(1000)
        scores[rng.integers(0, 1000, 50)] = 0.5  # force ties
        expected = sorted(
            ((i, float(s)) for i, s in enumerate(scores)),
            key=lambda pair: (-pair[1], pair[0]),
        )
        assert rank_nodes(scores) == expected


def test_dump_edges(tmp_path):
    graph = build_graph([(1, 0, 0.25), (2, 1, 0.5)], 3)
    path = tmp_path / "edges.tsv"
    dump_edges(graph, path)
    assert path.read_text(encoding="utf-8") == "0\t1\t0.25\n1\t2\t0.5\n"
