from __future__ import annotations

import pytest

from corpus_select.corpus_io import (
    Corpus,
    CorpusStats,
    Origin,
    SentenceRecord,
    tokenize,
)

from synth_corpus import topic_a_model, topic_b_model


def build_corpus(
    lines: list[str],
    origin: Origin = Origin.OUT_DOMAIN,
    source: str = "<memory>",
) -> Corpus:
    """In-memory corpus with load_corpus semantics (empty lines dropped)."""
    records = []
    dropped = 0
    for line in lines:
        tokens = tokenize(line)
        if not tokens:
            dropped += 1
            continue
        records.append(
            SentenceRecord(
                index=len(records), text=line, tokens=tuple(tokens), origin=origin
            )
        )
    stats = CorpusStats(
        records_kept=len(records),
        records_dropped=dropped,
        total_tokens=sum(len(r.tokens) for r in records),
    )
    return Corpus(records=records, source_path=source, stats=stats)


@pytest.fixture
def make_corpus():
    return build_corpus


@pytest.fixture(scope="session")
def shared_fixture() -> tuple[list[str], list[str]]:
    """The 50-sentence mixed-topic corpus every strategy must handle.

    Returns (in-domain lines, out-domain lines); out-domain is 15 topic-A
    lines followed by 35 topic-B lines.
    """
    model_a = topic_a_model(seed=101)
    model_b = topic_b_model(seed=102)
    in_lines = model_a.sentences(20, seed=103)
    out_lines = model_a.sentences(15, seed=104) + model_b.sentences(35, seed=105)
    return in_lines, out_lines
