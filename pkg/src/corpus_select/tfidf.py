"""TF-IDF vectors, cosine similarity, and query-vs-document KNN retrieval.

Term frequency is the within-document count divided by document length.
Inverse document frequency comes in two variants: the plain ratio
``doc_count / df`` (default; never below 1, so weights dominate TF) and
the dampened ``ln(doc_count / df)`` under which a term present in every
document drops out of the vectors entirely.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import sparse

from .corpus_io import Corpus, SentenceRecord
from .errors import EmptyCorpusError

logger = logging.getLogger(__name__)


class IdfVariant(str, Enum):
    RATIO = "ratio"
    LOG = "log"


@dataclass
class TfIdfIndex:
    """Per-document sparse term weights over a shared vocabulary.

    ``doc_vectors`` is a docs-by-terms CSR matrix holding only strictly
    positive weights; ``doc_norms`` caches each row's Euclidean norm.
    """

    vocabulary: dict[str, int]
    doc_vectors: sparse.csr_matrix
    doc_norms: np.ndarray
    doc_count: int
    df: np.ndarray
    idf: np.ndarray
    idf_variant: IdfVariant


def build_index(
    documents: Corpus, idf_variant: IdfVariant = IdfVariant.RATIO
) -> TfIdfIndex:
    """Vectorize every document; columns are assigned in sorted term order."""
    if not documents.records:
        raise EmptyCorpusError(f"cannot index empty corpus {documents.source_path}")
    idf_variant = IdfVariant(idf_variant)

    doc_terms = [Counter(rec.tokens) for rec in documents.records]
    df_counter: Counter[str] = Counter()
    for terms in doc_terms:
        df_counter.update(terms.keys())
    vocabulary = {term: col for col, term in enumerate(sorted(df_counter))}

    doc_count = len(documents.records)
    df = np.zeros(len(vocabulary), dtype=np.int64)
    for term, col in vocabulary.items():
        df[col] = df_counter[term]
    ratio = doc_count / df
    idf = np.log(ratio) if idf_variant is IdfVariant.LOG else ratio

    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for record, terms in zip(documents.records, doc_terms):
        length = len(record.tokens)
        for term in sorted(terms):
            weight = (terms[term] / length) * idf[vocabulary[term]]
            if weight > 0.0:
                indices.append(vocabulary[term])
                data.append(weight)
        indptr.append(len(indices))
    doc_vectors = sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(doc_count, len(vocabulary)),
    )
    doc_norms = np.sqrt(np.asarray(doc_vectors.power(2).sum(axis=1)).ravel())
    return TfIdfIndex(
        vocabulary=vocabulary,
        doc_vectors=doc_vectors,
        doc_norms=doc_norms,
        doc_count=doc_count,
        df=df,
        idf=idf,
        idf_variant=idf_variant,
    )


def vectorize_query(index: TfIdfIndex, query: SentenceRecord) -> sparse.csr_matrix:
    """Weigh a query with its own TF and the index's IDF; OOV terms are ignored."""
    counts = Counter(query.tokens)
    length = len(query.tokens)
    cols: list[int] = []
    data: list[float] = []
    for term in sorted(counts):
        col = index.vocabulary.get(term)
        if col is None or length == 0:
            continue
        weight = (counts[term] / length) * index.idf[col]
        if weight > 0.0:
            cols.append(col)
            data.append(weight)
    return sparse.csr_matrix(
        (np.asarray(data), (np.zeros(len(cols), dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(1, len(index.vocabulary)),
    )


def cosine_similarity(a: sparse.csr_matrix, b: sparse.csr_matrix) -> float:
    """dot(a, b) / (|a| |b|); 0.0 when either vector has zero norm."""
    norm_a = np.sqrt(a.power(2).sum())
    norm_b = np.sqrt(b.power(2).sum())
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    value = (a @ b.T).sum() / (norm_a * norm_b)
    return float(min(1.0, max(0.0, value)))


def _normalize_rows(matrix: sparse.csr_matrix, norms: np.ndarray) -> sparse.csr_matrix:
    inv = np.zeros_like(norms, dtype=np.float64)
    nonzero = norms > 0
    inv[nonzero] = 1.0 / norms[nonzero]
    return sparse.diags(inv) @ matrix


def knn_retrieve(
    index: TfIdfIndex, queries: Corpus, k: int
) -> dict[int, list[tuple[int, float]]]:
    """For each query record, the ``k`` most cosine-similar documents.

    Every document participates in the ranking (zero-similarity ones sort
    last); ties break toward the lower document index. Keys are query
    record indices.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    doc_normed = _normalize_rows(index.doc_vectors, index.doc_norms)

    results: dict[int, list[tuple[int, float]]] = {}
    take = min(k, index.doc_count)
    doc_ids = np.arange(index.doc_count)
    for pos, record in enumerate(queries.records):
        vec = vectorize_query(index, record)
        norm = np.sqrt(vec.power(2).sum())
        if norm > 0:
            sims = ((vec / norm) @ doc_normed.T).toarray().ravel()
            np.clip(sims, 0.0, 1.0, out=sims)
        else:
            sims = np.zeros(index.doc_count)
        order = np.lexsort((doc_ids, -sims))[:take]
        results[record.index] = [(int(d), float(sims[d])) for d in order]
        if (pos + 1) % 10_000 == 0:
            logger.info("retrieved neighbors for %d queries", pos + 1)
    return results


def dump_term_df(index: TfIdfIndex, path: str | Path) -> None:
    """Debug dump: one "term<TAB>df" line per vocabulary term, sorted."""
    lines = [f"{term}\t{index.df[col]}" for term, col in sorted(index.vocabulary.items())]
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
