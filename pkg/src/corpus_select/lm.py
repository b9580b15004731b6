"""Add-k smoothed bigram language model and sequence scoring.

Sequences are wrapped in begin/end sentinels so the first token is
conditioned on sentence start and the end of sentence is itself
predicted. The prediction space for any context is the kept vocabulary
plus the end sentinel and the unknown symbol (the begin sentinel is a
context, never an outcome), which keeps each conditional row summing
to exactly 1.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus_io import Corpus
from .errors import EmptyCorpusError
from .ngrams import NGramTable

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_SENTINELS = frozenset({BOS, EOS, UNK})


@dataclass
class BigramLM:
    """P(word | previous word) with add-k smoothing and an unknown symbol.

    ``unigram_counts`` covers the unk-mapped corpus tokens (no sentinels);
    ``bigram_counts`` covers the sentinel-wrapped rows. Instances are
    treated as immutable once built.
    """

    unigram_counts: NGramTable
    bigram_counts: NGramTable
    smoothing_k: float
    unk_cutoff: int
    _context_totals: dict[str, int] = field(init=False, repr=False)
    _kept_types: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.smoothing_k <= 0:
            raise ValueError(f"smoothing k must be > 0, got {self.smoothing_k}")
        totals: Counter[str] = Counter()
        for (context, _word), count in self.bigram_counts.counts.items():
            totals[context] += count
        self._context_totals = dict(totals)
        self._kept_types = frozenset(self.unigram_counts.vocabulary) - _SENTINELS

    @property
    def vocab_size(self) -> int:
        """Prediction-space size: kept types plus end sentinel plus unknown."""
        return len(self._kept_types) + 2

    def map_token(self, token: str) -> str:
        if token in self._kept_types or token in (BOS, EOS):
            return token
        return UNK

    def cond_prob(self, word: str, context: str) -> float:
        word = self.map_token(word)
        context = self.map_token(context)
        k = self.smoothing_k
        numer = self.bigram_counts.counts.get((context, word), 0) + k
        denom = self._context_totals.get(context, 0) + k * self.vocab_size
        return numer / denom


def fit_bigram_lm(
    corpus: Corpus, smoothing_k: float = 1.0, unk_cutoff: int = 1
) -> BigramLM:
    """Fit the bigram model; tokens with frequency < ``unk_cutoff`` become unknown."""
    if not corpus.records:
        raise EmptyCorpusError(f"cannot fit a language model on empty {corpus.source_path}")
    raw_freq: Counter[str] = Counter()
    for record in corpus.records:
        raw_freq.update(record.tokens)
    kept = {tok for tok, freq in raw_freq.items() if freq >= unk_cutoff}

    unigrams: Counter[tuple[str, ...]] = Counter()
    bigrams: Counter[tuple[str, ...]] = Counter()
    for record in corpus.records:
        mapped = [tok if tok in kept else UNK for tok in record.tokens]
        unigrams.update((tok,) for tok in mapped)
        row = [BOS, *mapped, EOS]
        for i in range(len(row) - 1):
            bigrams[(row[i], row[i + 1])] += 1

    unigram_table = NGramTable(
        order=1,
        counts=dict(unigrams),
        total=sum(unigrams.values()),
        vocabulary={tok for (tok,) in unigrams},
    )
    bigram_table = NGramTable(
        order=2,
        counts=dict(bigrams),
        total=sum(bigrams.values()),
        vocabulary={tok for gram in bigrams for tok in gram},
    )
    return BigramLM(
        unigram_counts=unigram_table,
        bigram_counts=bigram_table,
        smoothing_k=smoothing_k,
        unk_cutoff=unk_cutoff,
    )


def sequence_log_prob(lm: BigramLM, tokens: Sequence[str]) -> float:
    """Natural-log probability of the sentinel-wrapped sequence (<= 0)."""
    row = [BOS, *tokens, EOS]
    return sum(
        math.log(lm.cond_prob(row[i + 1], row[i])) for i in range(len(row) - 1)
    )


def _predicted_positions(tokens: Sequence[str]) -> int:
    # every token plus the end sentinel is predicted; the begin sentinel is not
    return len(tokens) + 1


def perplexity(lm: BigramLM, tokens: Sequence[str]) -> float:
    """exp of the average negative log-probability per predicted position."""
    return math.exp(-sequence_log_prob(lm, tokens) / _predicted_positions(tokens))


def cross_entropy(p_lm: BigramLM, tokens: Sequence[str]) -> float:
    """Per-token negative log-probability; equals ln(perplexity)."""
    return -sequence_log_prob(p_lm, tokens) / _predicted_positions(tokens)


def cross_entropy_difference(
    in_lm: BigramLM, out_lm: BigramLM, tokens: Sequence[str]
) -> float:
    """Cross-entropy under the in-domain model minus the general model.

    Negative values mean the sequence looks more in-domain than general.
    """
    return cross_entropy(in_lm, tokens) - cross_entropy(out_lm, tokens)


def dump_lm(lm: BigramLM, path: str | Path) -> None:
    """Sorted "context<TAB>word<TAB>count" lines under a JSON header line."""
    header = {
        "vocab_size": lm.vocab_size,
        "smoothing_k": lm.smoothing_k,
        "unk_cutoff": lm.unk_cutoff,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for (context, word), count in sorted(lm.bigram_counts.counts.items()):
        lines.append(f"{context}\t{word}\t{count}")
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")


def load_lm(path: str | Path) -> BigramLM:
    """Rebuild a model from :func:`dump_lm` output.

    Unigram counts are recovered from bigram targets: every token
    occurrence is the target of exactly one wrapped bigram.
    """
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        bigrams: dict[tuple[str, ...], int] = {}
        for line in fh:
            context, word, count = line.rstrip("\n").split("\t")
            bigrams[(context, word)] = int(count)

    unigrams: Counter[tuple[str, ...]] = Counter()
    for (_context, word), count in bigrams.items():
        if word != EOS:
            unigrams[(word,)] += count
    unigram_table = NGramTable(
        order=1,
        counts=dict(unigrams),
        total=sum(unigrams.values()),
        vocabulary={tok for (tok,) in unigrams},
    )
    bigram_table = NGramTable(
        order=2,
        counts=dict(bigrams),
        total=sum(bigrams.values()),
        vocabulary={tok for gram in bigrams for tok in gram},
    )
    lm = BigramLM(
        unigram_counts=unigram_table,
        bigram_counts=bigram_table,
        smoothing_k=float(header["smoothing_k"]),
        unk_cutoff=int(header["unk_cutoff"]),
    )
    if lm.vocab_size != int(header["vocab_size"]):
        raise ValueError(
            f"vocab size mismatch loading {path}: "
            f"header {header['vocab_size']}, rebuilt {lm.vocab_size}"
        )
    return lm
