"""N-gram frequency tables over tokenized corpora."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .corpus_io import Corpus


@dataclass
class NGramTable:
    """Frequency map from n-gram (token tuple) to count.

    ``vocabulary`` holds every distinct token seen in the source corpus,
    including tokens of records too short to yield a window.
    """

    order: int
    counts: dict[tuple[str, ...], int] = field(default_factory=dict)
    total: int = 0
    vocabulary: set[str] = field(default_factory=set)


def iter_ngrams(tokens: Sequence[str], order: int) -> Iterator[tuple[str, ...]]:
    """Contiguous ``order``-token windows; nothing for short sequences."""
    for i in range(len(tokens) - order + 1):
        yield tuple(tokens[i : i + order])


def count_ngrams(corpus: Corpus, order: int) -> NGramTable:
    """Count every contiguous window within each record (never across records)."""
    if order < 1:
        raise ValueError(f"n-gram order must be >= 1, got {order}")
    counts: Counter[tuple[str, ...]] = Counter()
    vocabulary: set[str] = set()
    for record in corpus.records:
        vocabulary.update(record.tokens)
        counts.update(iter_ngrams(record.tokens, order))
    return NGramTable(
        order=order,
        counts=dict(counts),
        total=sum(counts.values()),
        vocabulary=vocabulary,
    )


def top_k_ngrams(
    table: NGramTable, k: int
) -> list[tuple[tuple[str, ...], int]]:
    """Top ``k`` n-grams by frequency, ties broken lexicographically."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    ranked = sorted(table.counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]
