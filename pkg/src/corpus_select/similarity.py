"""Pairwise sentence similarity mining for graph construction.

Two backends produce the same (score, i, j) triples: a self-contained
lexical one (TF-IDF cosine over the sentences themselves, dampened-log
IDF) and an external embedding service reached over HTTP. Both scan all
pairs block by block so the quadratic pass never materializes a full
similarity matrix.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests

from .corpus_io import Corpus
from .errors import (
    EmbeddingDimensionMismatchError,
    EmbeddingServiceUnavailableError,
    EmptyCorpusError,
    MalformedResponseError,
)
from .tfidf import IdfVariant, build_index, _normalize_rows

logger = logging.getLogger(__name__)

EMBED_URL_ENV = "CORPUS_SELECT_EMBED_URL"

LEXICAL_TFIDF = "lexical-tfidf"
EXTERNAL_EMBEDDING = "external-embedding"


@dataclass(frozen=True)
class SimilarityBackend:
    """How sentence pairs get scored, plus pruning knobs.

    ``threshold`` is the minimum score a pair must reach to be emitted;
    ``top_pairs`` optionally caps the output at the highest-scoring pairs.
    """

    kind: str = LEXICAL_TFIDF
    threshold: float = 0.5
    top_pairs: int | None = None
    block_size: int = 2048
    endpoint: str | None = None
    batch_size: int = 64
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (LEXICAL_TFIDF, EXTERNAL_EMBEDDING):
            raise ValueError(f"unknown similarity backend {self.kind!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.block_size < 1 or self.batch_size < 1:
            raise ValueError("block_size and batch_size must be >= 1")
        if self.top_pairs is not None and self.top_pairs < 0:
            raise ValueError(f"top_pairs must be >= 0, got {self.top_pairs}")


def _prune(pairs: list[tuple[float, int, int]], cap: int) -> list[tuple[float, int, int]]:
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    return pairs[:cap]


def _block_ranges(n: int, size: int) -> list[tuple[int, int]]:
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def _mine_lexical(
    sentences: Corpus, backend: SimilarityBackend, threads: int
) -> list[tuple[float, int, int]]:
    index = build_index(sentences, IdfVariant.LOG)
    normed = _normalize_rows(index.doc_vectors, index.doc_norms).tocsr()
    blocks = _block_ranges(index.doc_count, backend.block_size)
    tasks = [
        (a, b) for bi, a in enumerate(blocks) for b in blocks[bi:]
    ]

    def scan(task: tuple[tuple[int, int], tuple[int, int]]):
        (a0, a1), (b0, b1) = task
        product = (normed[a0:a1] @ normed[b0:b1].T).tocoo()
        i = product.row + a0
        j = product.col + b0
        keep = (i < j) & (product.data >= backend.threshold) & (product.data > 0)
        return i[keep], j[keep], np.minimum(product.data[keep], 1.0)

    return _collect(tasks, scan, backend, threads)


def _mine_embeddings(
    sentences: Corpus, backend: SimilarityBackend, threads: int
) -> list[tuple[float, int, int]]:
    endpoint = backend.endpoint or os.environ.get(EMBED_URL_ENV)
    if not endpoint:
        raise ValueError(
            f"external embedding backend needs an endpoint; set it in the "
            f"config or via {EMBED_URL_ENV}"
        )
    vectors = embed_batch(
        [rec.text for rec in sentences.records],
        endpoint,
        batch_size=backend.batch_size,
        timeout=backend.timeout,
        retries=backend.retries,
        backoff=backend.backoff,
    )
    blocks = _block_ranges(len(sentences.records), backend.block_size)
    tasks = [(a, b) for bi, a in enumerate(blocks) for b in blocks[bi:]]

    def scan(task: tuple[tuple[int, int], tuple[int, int]]):
        (a0, a1), (b0, b1) = task
        sims = vectors[a0:a1] @ vectors[b0:b1].T
        rows, cols = np.nonzero(sims >= backend.threshold)
        i = rows + a0
        j = cols + b0
        keep = i < j
        return i[keep], j[keep], np.minimum(sims[rows[keep], cols[keep]], 1.0)

    return _collect(tasks, scan, backend, threads)


def _collect(tasks, scan, backend: SimilarityBackend, threads: int) -> list[tuple[float, int, int]]:
    """Run block-pair scans (optionally threaded) and merge deterministically."""
    cap = backend.top_pairs
    total = len(tasks)
    pairs: list[tuple[float, int, int]] = []

    def _consume(done: int, result) -> None:
        i, j, scores = result
        pairs.extend(zip(scores.tolist(), i.tolist(), j.tolist()))
        if done % 50 == 0:
            logger.info("scanned %d/%d block pairs", done, total)

    workers = max(1, min(threads, total)) if total else 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, result in enumerate(pool.map(scan, tasks), start=1):
                _consume(done, result)
                if cap is not None and len(pairs) > 2 * max(cap, 1):
                    pairs = _prune(pairs, cap)
    else:
        for done, task in enumerate(tasks, start=1):
            _consume(done, scan(task))
            if cap is not None and len(pairs) > 2 * max(cap, 1):
                pairs = _prune(pairs, cap)
    if cap is not None:
        pairs = _prune(pairs, cap)
    pairs.sort(key=lambda p: (p[1], p[2]))
    return pairs


def mine_pairs(
    sentences: Corpus, backend: SimilarityBackend, threads: int = 1
) -> list[tuple[float, int, int]]:
    """All sufficiently similar sentence pairs as (score, i, j) with i < j.

    Output is sorted by (i, j) and deterministic for the lexical backend.
    ``threads`` > 1 parallelizes the block scan; the merge order is fixed,
    so results do not depend on scheduling.
    """
    if not sentences.records:
        raise EmptyCorpusError(f"cannot mine pairs over empty {sentences.source_path}")
    if backend.kind == EXTERNAL_EMBEDDING:
        return _mine_embeddings(sentences, backend, threads)
    return _mine_lexical(sentences, backend, threads)


def embed_batch(
    texts: list[str],
    endpoint: str,
    batch_size: int = 64,
    timeout: float = 30.0,
    retries: int = 3,
    backoff: float = 1.0,
) -> np.ndarray:
    """Fetch unit-normalized embeddings for ``texts``, preserving order.

    The service takes ``{"texts": [...]}`` and answers
    ``{"embeddings": [[...], ...]}``. Requests are retried with
    exponential backoff before the run aborts.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if not texts:
        return np.zeros((0, 0))
    chunks: list[np.ndarray] = []
    dim: int | None = None
    for start in range(0, len(texts), batch_size):
        chunk = texts[start : start + batch_size]
        body = _post_with_retry(endpoint, {"texts": chunk}, timeout, retries, backoff)
        vectors = _parse_embeddings(body, expected=len(chunk))
        if dim is None:
            dim = vectors.shape[1]
        elif vectors.shape[1] != dim:
            raise EmbeddingDimensionMismatchError(
                f"batch at offset {start} returned dimension {vectors.shape[1]}, "
                f"expected {dim}"
            )
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            raise MalformedResponseError("service returned a zero-norm embedding")
        chunks.append(vectors / norms[:, None])
    return np.vstack(chunks)


def _post_with_retry(
    endpoint: str, payload: dict, timeout: float, retries: int, backoff: float
) -> dict:
    last_error: str = "no attempts made"
    for attempt in range(retries):
        try:
            response = requests.post(endpoint, json=payload, timeout=timeout)
            if response.status_code == 200:
                try:
                    return response.json()
                except ValueError as exc:
                    raise MalformedResponseError(f"response is not JSON: {exc}") from None
            last_error = f"HTTP {response.status_code}"
        except requests.RequestException as exc:
            last_error = str(exc)
        if attempt + 1 < retries:
            time.sleep(backoff * 2**attempt)
    raise EmbeddingServiceUnavailableError(
        f"{endpoint} failed after {retries} attempts: {last_error}"
    )


def _parse_embeddings(body: dict, expected: int) -> np.ndarray:
    if not isinstance(body, dict) or "embeddings" not in body:
        raise MalformedResponseError('response lacks an "embeddings" field')
    raw = body["embeddings"]
    if not isinstance(raw, list) or len(raw) != expected:
        raise MalformedResponseError(
            f"expected {expected} embeddings, got "
            f"{len(raw) if isinstance(raw, list) else type(raw).__name__}"
        )
    lengths = {len(vec) for vec in raw}
    if len(lengths) > 1:
        raise EmbeddingDimensionMismatchError(
            f"vectors within one batch differ in dimension: {sorted(lengths)}"
        )
    try:
        vectors = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MalformedResponseError(f"embeddings are not numeric: {exc}") from None
    if vectors.ndim != 2 or vectors.shape[1] == 0:
        raise MalformedResponseError(f"embeddings have shape {vectors.shape}")
    return vectors
