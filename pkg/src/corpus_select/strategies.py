"""The selection strategies and their shared request/report contract.

Every strategy consumes a :class:`SelectionRequest` and returns a
:class:`SelectionReport` whose ``selected`` list pairs out-domain record
indices with strategy-specific scores, in rank order. All strategies are
deterministic given (corpora, params, seed).
"""

from __future__ import annotations

import heapq
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .corpus_io import Corpus, CorpusStats, Origin, SentenceRecord, subset
from .errors import EmptyCorpusError, ShortfallWarning, UnknownStrategyError
from .graph import PageRankConfig, build_graph, pagerank, rank_nodes
from .lm import (
    cross_entropy,
    cross_entropy_difference,
    fit_bigram_lm,
    perplexity,
)
from .ngrams import NGramTable, count_ngrams, iter_ngrams, top_k_ngrams
from .similarity import SimilarityBackend, mine_pairs
from .tfidf import IdfVariant, build_index, knn_retrieve

logger = logging.getLogger(__name__)

RANDOM_ALGORITHM = "numpy-pcg64-permutation"


@dataclass
class StrategyParams:
    """Per-strategy knobs with the documented defaults."""

    ngram_order: int = 2
    adaptive: bool = True
    top_bigram_count: int = 100
    in_domain_cap: int | None = None
    knn_k: int = 10
    idf_variant: IdfVariant = IdfVariant.RATIO
    smoothing_k: float = 1.0
    unk_cutoff: int = 1
    ce_difference: bool = False
    out_lm_sample: int = 100_000
    similarity: SimilarityBackend = field(default_factory=SimilarityBackend)
    pagerank: PageRankConfig = field(default_factory=PageRankConfig)
    threads: int = 1

    def __post_init__(self) -> None:
        self.idf_variant = IdfVariant(self.idf_variant)


@dataclass
class SelectionRequest:
    out_domain: Corpus
    in_domain: Corpus
    select_count: int
    seed: int = 42
    params: StrategyParams = field(default_factory=StrategyParams)

    def __post_init__(self) -> None:
        if not 1 <= self.select_count <= len(self.out_domain):
            raise ValueError(
                f"select_count must be in [1, {len(self.out_domain)}], "
                f"got {self.select_count}"
            )


@dataclass
class SelectionReport:
    """Ranked output of one strategy run."""

    strategy: str
    selected: list[tuple[int, float]]
    seed: int
    params: dict[str, object]
    stats: dict[str, object]
    shortfall: bool = False
    converged: bool = True
    runtime_seconds: float | None = None
    metrics: dict[str, float] | None = None
    out_domain: Corpus | None = None


def resolved_params(strategy: str, req: SelectionRequest) -> dict[str, object]:
    """Flat, fully-materialized parameter echo (dotted config keys)."""
    p = req.params
    out: dict[str, object] = {
        "strategy": strategy,
        "n": req.select_count,
        "seed": req.seed,
        "ngram.order": p.ngram_order,
        "ngram.adaptive": p.adaptive,
        "textgram.top_bigrams": p.top_bigram_count,
        "textgram.in_domain_cap": p.in_domain_cap,
        "knn.k": p.knn_k,
        "tfidf.idf": p.idf_variant.value,
        "lm.smoothing_k": p.smoothing_k,
        "lm.unk_cutoff": p.unk_cutoff,
        "ce.difference": p.ce_difference,
        "ce.out_sample": p.out_lm_sample,
        "similarity.backend": p.similarity.kind,
        "similarity.threshold": p.similarity.threshold,
        "similarity.top_pairs": p.similarity.top_pairs,
        "similarity.block_size": p.similarity.block_size,
        "embedding.endpoint": p.similarity.endpoint,
        "embedding.batch_size": p.similarity.batch_size,
        "embedding.timeout": p.similarity.timeout,
        "pagerank.damping": p.pagerank.damping,
        "pagerank.tolerance": p.pagerank.tolerance,
        "pagerank.max_iterations": p.pagerank.max_iterations,
        "threads": p.threads,
    }
    if strategy == "random":
        out["random.algorithm"] = RANDOM_ALGORITHM
    return out


def _make_report(
    strategy: str,
    req: SelectionRequest,
    selected: list[tuple[int, float]],
    shortfall: bool = False,
    converged: bool = True,
) -> SelectionReport:
    if shortfall:
        warnings.warn(
            f"{strategy}: selected {len(selected)} of {req.select_count} requested",
            ShortfallWarning,
            stacklevel=3,
        )
    stats = {
        "out_domain": {
            "source": req.out_domain.source_path,
            **req.out_domain.stats.as_dict(),
        },
        "in_domain": {
            "source": req.in_domain.source_path,
            **req.in_domain.stats.as_dict(),
        },
        "selected_count": len(selected),
        "shortfall": shortfall,
        "converged": converged,
    }
    return SelectionReport(
        strategy=strategy,
        selected=selected,
        seed=req.seed,
        params=resolved_params(strategy, req),
        stats=stats,
        shortfall=shortfall,
        converged=converged,
        out_domain=req.out_domain,
    )


def _top_by_score(scores: list[float], count: int) -> list[tuple[int, float]]:
    """Highest score first, ties broken by ascending sentence index."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(i, scores[i]) for i in order[:count]]


def _bottom_by_score(scores: list[float], count: int) -> list[tuple[int, float]]:
    """Lowest score first, ties broken by ascending sentence index."""
    order = sorted(range(len(scores)), key=lambda i: (scores[i], i))
    return [(i, scores[i]) for i in order[:count]]


def select_random(req: SelectionRequest) -> SelectionReport:
    """Uniform sample without replacement; rank order is draw order."""
    rng = np.random.default_rng(req.seed)
    drawn = rng.permutation(len(req.out_domain))[: req.select_count]
    return _make_report("random", req, [(int(i), 1.0) for i in drawn])


def _coverage_score(tokens: tuple[str, ...], table: NGramTable) -> float:
    grams = list(iter_ngrams(tokens, table.order))
    if not grams:
        return 0.0
    return sum(table.counts.get(g, 0) for g in grams) / len(grams)


def select_ngram_coverage(req: SelectionRequest) -> SelectionReport:
    """Score sentences by the mean reference frequency of their n-grams.

    Adaptive mode takes frequencies from the in-domain corpus; the
    non-adaptive variant uses the out-domain corpus itself.
    """
    reference = req.in_domain if req.params.adaptive else req.out_domain
    table = count_ngrams(reference, req.params.ngram_order)
    scores = [_coverage_score(rec.tokens, table) for rec in req.out_domain.records]
    return _make_report(
        "ngram-coverage", req, _top_by_score(scores, req.select_count)
    )


def select_unseen_ngram_weighted(req: SelectionRequest) -> SelectionReport:
    """Greedy pick of the sentence with the heaviest not-yet-seen n-grams.

    The seen set starts from the in-domain corpus; each pick adds its own
    n-grams, so later rounds reward novelty. Frequencies come from the
    out-domain table and are summed per occurrence. Implemented as lazy
    greedy: scores only drop as the seen set grows, so stale heap entries
    are safe upper bounds.
    """
    order = req.params.ngram_order
    out_table = count_ngrams(req.out_domain, order)
    seen: set[tuple[str, ...]] = set(count_ngrams(req.in_domain, order).counts)
    sentence_grams = [
        list(iter_ngrams(rec.tokens, order)) for rec in req.out_domain.records
    ]

    def score(i: int) -> float:
        return float(
            sum(out_table.counts[g] for g in sentence_grams[i] if g not in seen)
        )

    round_no = 0
    heap = [(-score(i), i, round_no) for i in range(len(req.out_domain))]
    heapq.heapify(heap)
    selected: list[tuple[int, float]] = []
    while heap and len(selected) < req.select_count:
        neg, i, stamp = heapq.heappop(heap)
        if stamp != round_no:
            heapq.heappush(heap, (-score(i), i, round_no))
            continue
        selected.append((i, -neg))
        seen.update(sentence_grams[i])
        round_no += 1
    return _make_report("unseen-ngram", req, selected)


def select_tfidf_knn(req: SelectionRequest) -> SelectionReport:
    """Union of per-query nearest neighbors, scored by best similarity.

    Out-domain sentences are the documents, in-domain sentences the
    queries. A document's score is the maximum similarity it reached over
    all queries; fewer than the requested count in the union is reported
    as a shortfall, not an error.
    """
    index = build_index(req.out_domain, req.params.idf_variant)
    neighborhoods = knn_retrieve(index, req.in_domain, req.params.knn_k)
    best: dict[int, float] = {}
    for query_index in sorted(neighborhoods):
        for doc, sim in neighborhoods[query_index]:
            if sim > best.get(doc, -1.0):
                best[doc] = sim
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    selected = [(doc, sim) for doc, sim in ranked[: req.select_count]]
    return _make_report(
        "tfidf-knn", req, selected, shortfall=len(selected) < req.select_count
    )


def select_perplexity(req: SelectionRequest) -> SelectionReport:
    """Keep the sentences the in-domain language model finds least surprising."""
    model = fit_bigram_lm(req.in_domain, req.params.smoothing_k, req.params.unk_cutoff)
    scores = [perplexity(model, rec.tokens) for rec in req.out_domain.records]
    return _make_report(
        "perplexity", req, _bottom_by_score(scores, req.select_count)
    )


def _sample_records(corpus: Corpus, size: int, seed: int) -> Corpus:
    if len(corpus) <= size:
        return corpus
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(corpus), size=size, replace=False))
    return subset(corpus, [int(i) for i in picked])


def select_cross_entropy(req: SelectionRequest) -> SelectionReport:
    """Lowest cross-entropy under the in-domain model.

    With ``ce_difference`` enabled the score subtracts the cross-entropy
    under a general model fit on a seeded out-domain sample, so negative
    scores mean "more in-domain-like than general".
    """
    p = req.params
    in_lm = fit_bigram_lm(req.in_domain, p.smoothing_k, p.unk_cutoff)
    if p.ce_difference:
        sample = _sample_records(req.out_domain, p.out_lm_sample, req.seed)
        out_lm = fit_bigram_lm(sample, p.smoothing_k, p.unk_cutoff)
        scores = [
            cross_entropy_difference(in_lm, out_lm, rec.tokens)
            for rec in req.out_domain.records
        ]
    else:
        scores = [cross_entropy(in_lm, rec.tokens) for rec in req.out_domain.records]
    return _make_report(
        "cross-entropy", req, _bottom_by_score(scores, req.select_count)
    )


def select_textrank(req: SelectionRequest) -> SelectionReport:
    """Graph-rank the out-domain corpus alone and keep the top nodes.

    Non-adaptive by design: the in-domain corpus plays no part, which is
    exactly the weakness the seeded variant below addresses.
    """
    p = req.params
    pairs = mine_pairs(req.out_domain, p.similarity, threads=p.threads)
    graph = build_graph(
        ((i, j, score) for score, i, j in pairs),
        node_count=len(req.out_domain),
        threshold=p.similarity.threshold,
    )
    result = pagerank(graph, p.pagerank)
    ranked = rank_nodes(result.scores)
    selected = ranked[: req.select_count]
    return _make_report(
        "textrank", req, selected, converged=result.converged
    )


def select_in_domain_seeds(
    in_domain: Corpus,
    ngram_order: int = 2,
    top_bigram_count: int = 100,
    cap: int | None = None,
) -> list[SentenceRecord]:
    """In-domain sentences containing at least one top-frequency n-gram.

    Containment means a contiguous token window, not a raw-text substring.
    With ``cap`` set, matching sentences are ranked by the summed table
    frequency of their matching windows and only the best ``cap`` kept
    (ties toward the lower index), preserving corpus order in the result.
    """
    table = count_ngrams(in_domain, ngram_order)
    top = dict(top_k_ngrams(table, top_bigram_count))
    matches: list[tuple[int, float]] = []
    for rec in in_domain.records:
        weight = sum(top[g] for g in iter_ngrams(rec.tokens, ngram_order) if g in top)
        if weight > 0:
            matches.append((rec.index, weight))
    if cap is not None and len(matches) > cap:
        matches.sort(key=lambda m: (-m[1], m[0]))
        matches = sorted(matches[:cap])
    return [in_domain.record(i) for i, _ in matches]


def take_out_domain(
    ranked: list[tuple[int, float]], out_count: int, count: int
) -> list[tuple[int, float]]:
    """Walk a node ranking, keeping only out-domain nodes (ids < out_count)."""
    kept: list[tuple[int, float]] = []
    for node, score in ranked:
        if node < out_count:
            kept.append((node, score))
            if len(kept) == count:
                break
    return kept


def select_textgram(req: SelectionRequest) -> SelectionReport:
    """Similarity-graph ranking seeded with top-n-gram in-domain sentences.

    Pipeline: pick in-domain seed sentences by their top-frequency
    n-grams, collate them after the out-domain corpus, mine pairwise
    similarities over the collation, rank all nodes with the damped walk,
    then keep the best-ranked out-domain sentences.
    """
    if not req.in_domain.records:
        raise EmptyCorpusError("textgram needs a non-empty in-domain corpus")
    p = req.params
    seeds = select_in_domain_seeds(
        req.in_domain, p.ngram_order, p.top_bigram_count, p.in_domain_cap
    )
    out_count = len(req.out_domain)
    records = [
        *req.out_domain.records,
        *(
            SentenceRecord(
                index=out_count + pos,
                text=rec.text,
                tokens=rec.tokens,
                origin=Origin.IN_DOMAIN,
            )
            for pos, rec in enumerate(seeds)
        ),
    ]
    collation = Corpus(
        records=records,
        source_path=req.out_domain.source_path,
        stats=CorpusStats(
            records_kept=len(records),
            records_dropped=0,
            total_tokens=sum(len(r.tokens) for r in records),
        ),
    )
    logger.info(
        "textgram: %d out-domain + %d seed sentences collated", out_count, len(seeds)
    )
    pairs = mine_pairs(collation, p.similarity, threads=p.threads)
    graph = build_graph(
        ((i, j, score) for score, i, j in pairs),
        node_count=len(collation.records),
        threshold=p.similarity.threshold,
    )
    result = pagerank(graph, p.pagerank)
    ranked = rank_nodes(result.scores)
    selected = take_out_domain(ranked, out_count, req.select_count)
    return _make_report(
        "textgram",
        req,
        selected,
        shortfall=len(selected) < req.select_count,
        converged=result.converged,
    )


REGISTRY: dict[str, Callable[[SelectionRequest], SelectionReport]] = {
    "random": select_random,
    "ngram-coverage": select_ngram_coverage,
    "unseen-ngram": select_unseen_ngram_weighted,
    "tfidf-knn": select_tfidf_knn,
    "perplexity": select_perplexity,
    "cross-entropy": select_cross_entropy,
    "textrank": select_textrank,
    "textgram": select_textgram,
}


def run_selection(strategy: str, req: SelectionRequest) -> SelectionReport:
    """Dispatch to a registered strategy and stamp the wall-clock runtime."""
    try:
        fn = REGISTRY[strategy]
    except KeyError:
        raise UnknownStrategyError(strategy, sorted(REGISTRY)) from None
    started = time.perf_counter()
    report = fn(req)
    report.runtime_seconds = time.perf_counter() - started
    return report


def report_from_manifest(manifest: dict, out_domain: Corpus) -> SelectionReport:
    """Rebuild a report from its written manifest for offline evaluation.

    Wall-clock timing is not stored in manifests (they are byte-stable
    across runs), so the rebuilt report has no runtime.
    """
    return SelectionReport(
        strategy=manifest["strategy"],
        selected=[(entry["index"], entry["score"]) for entry in manifest["selected"]],
        seed=manifest.get("seed", 0),
        params=dict(manifest.get("params", {})),
        stats=dict(manifest.get("stats", {})),
        shortfall=bool(manifest.get("stats", {}).get("shortfall", False)),
        converged=bool(manifest.get("stats", {}).get("converged", True)),
        runtime_seconds=None,
        out_domain=out_domain,
    )
