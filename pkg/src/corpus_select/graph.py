"""Sparse weighted sentence graph and its damped random-walk ranking.

The node score iteration is

    score(i) <- (1 - damping) + damping * sum_j  w(j,i) / out_weight(j) * score(j)

over the in-neighbors j of i (identical to the out-neighbors here, the
graph being undirected). Weights enter only as ratios, so uniformly
scaling all edges leaves scores unchanged; a node with no edges settles
at ``1 - damping``. Scores are not normalized to a distribution;
ranking consumes them raw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)


@dataclass
class SimilarityGraph:
    """Undirected weighted graph over sentence nodes.

    ``weights`` is a symmetric CSR matrix with zero diagonal and strictly
    positive stored entries.
    """

    node_count: int
    weights: sparse.csr_matrix

    @property
    def edge_count(self) -> int:
        return self.weights.nnz // 2

    def edge_list(self) -> list[tuple[int, int, float]]:
        """Edges as (i, j, weight) with i < j, sorted."""
        coo = self.weights.tocoo()
        edges = [
            (int(i), int(j), float(w))
            for i, j, w in zip(coo.row, coo.col, coo.data)
            if i < j
        ]
        edges.sort()
        return edges


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must be in (0, 1), got {self.damping}")
        if self.tolerance <= 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class PageRankResult:
    scores: np.ndarray
    converged: bool
    iterations: int
    residual: float


def build_graph(
    similarities: Iterable[tuple[int, int, float]],
    node_count: int,
    threshold: float = 0.0,
) -> SimilarityGraph:
    """Symmetrize (i, j, score) triples into a graph.

    Self-pairs are dropped; pairs below ``threshold`` are dropped; a pair
    seen more than once keeps its maximum score.
    """
    best: dict[tuple[int, int], float] = {}
    for i, j, score in similarities:
        if not 0 <= i < node_count or not 0 <= j < node_count:
            raise IndexError(
                f"edge ({i}, {j}) out of range for {node_count} nodes"
            )
        if not math.isfinite(score):
            raise ValueError(f"non-finite similarity {score!r} for edge ({i}, {j})")
        if i == j or score < threshold:
            continue
        key = (i, j) if i < j else (j, i)
        prev = best.get(key)
        if prev is None or score > prev:
            best[key] = score

    rows = np.empty(2 * len(best), dtype=np.int64)
    cols = np.empty(2 * len(best), dtype=np.int64)
    data = np.empty(2 * len(best), dtype=np.float64)
    for pos, ((i, j), w) in enumerate(best.items()):
        rows[2 * pos], cols[2 * pos], data[2 * pos] = i, j, w
        rows[2 * pos + 1], cols[2 * pos + 1], data[2 * pos + 1] = j, i, w
    weights = sparse.csr_matrix((data, (rows, cols)), shape=(node_count, node_count))
    return SimilarityGraph(node_count=node_count, weights=weights)


def pagerank(graph: SimilarityGraph, config: PageRankConfig = PageRankConfig()) -> PageRankResult:
    """Power iteration from all-ones until the max score change < tolerance.

    On convergence the returned scores satisfy the fixed-point equation
    within the tolerance (max-norm). Non-convergence is not an error: the
    last iterate comes back with ``converged=False``.
    """
    n = graph.node_count
    if n < 1:
        raise ValueError("graph must have at least one node")
    out_weight = np.asarray(graph.weights.sum(axis=1)).ravel()
    inv = np.zeros(n)
    nonzero = out_weight > 0
    inv[nonzero] = 1.0 / out_weight[nonzero]
    # transition[j, i] = w(j, i) / out_weight(j); applied transposed below
    transition = (sparse.diags(inv) @ graph.weights).tocsc()

    damping = config.damping
    scores = np.ones(n)
    residual = math.inf
    for iteration in range(1, config.max_iterations + 1):
        updated = (1.0 - damping) + damping * (transition.T @ scores)
        residual = float(np.max(np.abs(updated - scores)))
        if residual < config.tolerance:
            # `scores` already satisfies the fixed point to within tolerance
            return PageRankResult(
                scores=scores, converged=True, iterations=iteration, residual=residual
            )
        scores = updated
    logger.warning(
        "pagerank did not converge in %d iterations (residual %.3g)",
        config.max_iterations,
        residual,
    )
    return PageRankResult(
        scores=scores,
        converged=False,
        iterations=config.max_iterations,
        residual=residual,
    )


def rank_nodes(scores: Sequence[float]) -> list[tuple[int, float]]:
    """Nodes by descending score, ties broken by ascending node index."""
    arr = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(arr)), -arr))
    return [(int(node), float(arr[node])) for node in order]


def dump_edges(graph: SimilarityGraph, path: str | Path) -> None:
    """Debug dump: one "i<TAB>j<TAB>weight" line per undirected edge."""
    lines = [f"{i}\t{j}\t{w:.9g}" for i, j, w in graph.edge_list()]
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
