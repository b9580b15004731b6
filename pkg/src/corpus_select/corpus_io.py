"""Corpus ingestion, tokenization, and selection output.

Owns the on-disk formats (plain lines, JSON lines, selection manifests)
and the deterministic 0-based sentence indexing every other module
relies on.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .errors import MalformedLineError, MissingManifestError, Utf8Error

if TYPE_CHECKING:  # pragma: no cover
    from .strategies import SelectionReport

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 10_000


class Origin(str, Enum):
    """Which side of the selection a sentence came from."""

    IN_DOMAIN = "in-domain"
    OUT_DOMAIN = "out-domain"


class CorpusFormat(str, Enum):
    PLAIN_LINES = "plain"
    JSON_LINES = "jsonl"


@dataclass(frozen=True)
class SentenceRecord:
    """One selectable unit: original text plus its normalized tokens.

    ``index`` equals the record's 0-based position among the kept records
    of its source file and never changes after load.
    """

    index: int
    text: str
    tokens: tuple[str, ...]
    origin: Origin


@dataclass(frozen=True)
class CorpusStats:
    records_kept: int
    records_dropped: int
    total_tokens: int

    def as_dict(self) -> dict[str, int]:
        return {
            "records_kept": self.records_kept,
            "records_dropped": self.records_dropped,
            "total_tokens": self.total_tokens,
        }


@dataclass
class Corpus:
    records: list[SentenceRecord]
    source_path: str
    stats: CorpusStats

    def __len__(self) -> int:
        return len(self.records)

    def record(self, index: int) -> SentenceRecord:
        if not 0 <= index < len(self.records):
            raise IndexError(
                f"sentence index {index} out of range for corpus of {len(self.records)}"
            )
        return self.records[index]


def _is_edge_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_edge_punct(token[start]):
        start += 1
    while end > start and _is_edge_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on Unicode whitespace, strip edge punctuation.

    Tokens that become empty are dropped. Pure and total: any string in,
    possibly-empty token list out.
    """
    out = []
    for raw in text.lower().split():
        tok = _strip_edge_punct(raw)
        if tok:
            out.append(tok)
    return out


def _decode_line(raw: bytes, line_no: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        raise Utf8Error(line_no) from None


def _text_from_json(line: str, line_no: int) -> str:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLineError(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise MalformedLineError(line_no, "record is not a JSON object")
    text = obj.get("text")
    if not isinstance(text, str):
        raise MalformedLineError(line_no, 'missing string "text" field')
    return text


def load_corpus(
    path: str | Path,
    format: CorpusFormat = CorpusFormat.PLAIN_LINES,
    origin: Origin = Origin.OUT_DOMAIN,
    limit: int | None = None,
) -> Corpus:
    """Read a line-per-sentence corpus with deterministic indexing.

    Lines whose token sequence is empty are dropped (counted in stats,
    not an error). With ``limit`` set, reading stops after ``limit`` kept
    records, so the result is a prefix of the unlimited load.
    """
    path = Path(path)
    records: list[SentenceRecord] = []
    dropped = 0
    total_tokens = 0
    with open(path, "rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if limit is not None and len(records) >= limit:
                break
            line = _decode_line(raw, line_no).rstrip("\r\n")
            if format is CorpusFormat.JSON_LINES:
                text = _text_from_json(line, line_no)
            else:
                text = line
            tokens = tokenize(text)
            if not tokens:
                dropped += 1
                continue
            records.append(
                SentenceRecord(
                    index=len(records),
                    text=text,
                    tokens=tuple(tokens),
                    origin=origin,
                )
            )
            total_tokens += len(tokens)
            if len(records) % PROGRESS_EVERY == 0:
                logger.info("loaded %d sentences from %s", len(records), path)
    stats = CorpusStats(
        records_kept=len(records),
        records_dropped=dropped,
        total_tokens=total_tokens,
    )
    return Corpus(records=records, source_path=str(path), stats=stats)


def subset(corpus: Corpus, indices: Sequence[int]) -> Corpus:
    """A new corpus from the given record indices, reindexed from 0."""
    records = [
        replace(corpus.record(idx), index=pos) for pos, idx in enumerate(indices)
    ]
    stats = CorpusStats(
        records_kept=len(records),
        records_dropped=0,
        total_tokens=sum(len(r.tokens) for r in records),
    )
    return Corpus(records=records, source_path=corpus.source_path, stats=stats)


def _nine_digits(value):
    """Round floats to 9 significant digits for stable manifest output."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if isinstance(value, dict):
        return {k: _nine_digits(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_nine_digits(v) for v in value]
    return value


def manifest_path_for(out_path: str | Path) -> Path:
    return Path(out_path).with_suffix(".manifest.json")


def write_selection(
    report: "SelectionReport",
    corpus: Corpus,
    out_path: str | Path,
    format: CorpusFormat = CorpusFormat.PLAIN_LINES,
) -> None:
    """Write selected sentences in rank order plus a JSON manifest.

    Output is byte-identical across runs for identical report contents.
    Raises IndexError if the report references an index outside ``corpus``.
    """
    out_path = Path(out_path)
    lines = []
    for index, _score in report.selected:
        text = corpus.record(index).text
        if format is CorpusFormat.JSON_LINES:
            lines.append(json.dumps({"text": text}, ensure_ascii=False))
        else:
            lines.append(text)
    body = "".join(line + "\n" for line in lines)
    out_path.write_text(body, encoding="utf-8", newline="\n")

    manifest = {
        "strategy": report.strategy,
        "params": _nine_digits(report.params),
        "seed": report.seed,
        "selected": [
            {"index": index, "score": _nine_digits(score), "rank": rank}
            for rank, (index, score) in enumerate(report.selected, start=1)
        ],
        "stats": _nine_digits(report.stats),
    }
    manifest_path = manifest_path_for(out_path)
    manifest_path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    logger.info(
        "wrote %d sentences to %s (manifest %s)",
        len(report.selected),
        out_path,
        manifest_path,
    )


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingManifestError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
