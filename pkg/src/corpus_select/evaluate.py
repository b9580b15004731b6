"""Proxy domain-relevance metrics and strategy comparison reports.

Fine-tuning a downstream model is out of reach for a desk run, so
strategies are compared on cheap stand-ins: how much of the selected
text's bigram mass the in-domain corpus already knows, and how surprised
an in-domain language model is by the selection. Every comparison report
states this substitution in its header.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus_io import Corpus, subset
from .errors import EmptySelectionError, MismatchedCorporaError
from .lm import BigramLM, fit_bigram_lm, perplexity
from .ngrams import NGramTable, count_ngrams, iter_ngrams
from .strategies import SelectionReport

logger = logging.getLogger(__name__)

REPORT_HEADER = (
    "Proxy metrics (bigram coverage, in-domain perplexity) stand in for "
    "downstream fine-tuning quality."
)


@dataclass
class StrategyRow:
    strategy: str
    coverage: float
    mean_ppl: float
    runtime_s: float | None


@dataclass
class Comparison:
    """One row per strategy plus the pairwise selection-overlap matrix."""

    rows: list[StrategyRow]
    overlap: list[list[float]]
    fixture: str
    per_sentence_ppl: dict[str, list[float]]

    def to_json_dict(self) -> dict:
        return {
            "header": REPORT_HEADER,
            "rows": [
                {
                    "strategy": row.strategy,
                    "coverage": row.coverage,
                    "mean_ppl": row.mean_ppl,
                    "runtime_s": row.runtime_s,
                }
                for row in self.rows
            ],
            "overlap": self.overlap,
            "fixture": self.fixture,
            "per_sentence_ppl": self.per_sentence_ppl,
        }

    def render_text(self) -> str:
        lines = [REPORT_HEADER, ""]
        header = f"{'strategy':<16} {'coverage':>10} {'mean_ppl':>12} {'runtime_s':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for row in self.rows:
            runtime = f"{row.runtime_s:.3f}" if row.runtime_s is not None else "-"
            lines.append(
                f"{row.strategy:<16} {row.coverage:>10.4f} "
                f"{row.mean_ppl:>12.3f} {runtime:>10}"
            )
        lines.append("")
        lines.append("selection overlap (Jaccard):")
        names = [row.strategy for row in self.rows]
        width = max((len(n) for n in names), default=8)
        lines.append(" " * (width + 1) + " ".join(f"{n:>{width}}" for n in names))
        for name, row in zip(names, self.overlap):
            cells = " ".join(f"{v:>{width}.3f}" for v in row)
            lines.append(f"{name:>{width}} {cells}")
        return "\n".join(lines) + "\n"


def coverage_metric(selected: Corpus, in_domain_table: NGramTable) -> float:
    """Fraction of the selection's bigram occurrences known in-domain."""
    if in_domain_table.order != 2:
        raise ValueError(
            f"coverage expects a bigram table, got order {in_domain_table.order}"
        )
    known = 0
    total = 0
    for rec in selected.records:
        for gram in iter_ngrams(rec.tokens, 2):
            total += 1
            if gram in in_domain_table.counts:
                known += 1
    return known / total if total else 0.0


def perplexity_metric(selected: Corpus, lm: BigramLM) -> float:
    """Arithmetic mean of per-sentence perplexities under ``lm``."""
    if not selected.records:
        raise EmptySelectionError("perplexity metric needs at least one sentence")
    values = [perplexity(lm, rec.tokens) for rec in selected.records]
    return sum(values) / len(values)


def _jaccard(a: set[int], b: set[int]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def compare_strategies(
    reports: list[SelectionReport],
    in_domain: Corpus,
    smoothing_k: float = 1.0,
    unk_cutoff: int = 1,
) -> Comparison:
    """Proxy metrics per strategy plus the pairwise overlap matrix.

    All reports must carry the same out-domain corpus. Metrics are also
    attached back onto each report.
    """
    if not reports:
        raise ValueError("no reports to compare")
    sources = {r.out_domain.source_path if r.out_domain else None for r in reports}
    if len(sources) != 1 or None in sources:
        raise MismatchedCorporaError(
            f"reports reference different out-domain corpora: {sorted(map(str, sources))}"
        )
    out_domain = reports[0].out_domain
    assert out_domain is not None

    table = count_ngrams(in_domain, 2)
    model = fit_bigram_lm(in_domain, smoothing_k, unk_cutoff)

    rows: list[StrategyRow] = []
    per_sentence: dict[str, list[float]] = {}
    index_sets: list[set[int]] = []
    for report in reports:
        indices = [idx for idx, _ in report.selected]
        chosen = subset(out_domain, indices)
        coverage = coverage_metric(chosen, table)
        ppl_values = [perplexity(model, rec.tokens) for rec in chosen.records]
        mean_ppl = sum(ppl_values) / len(ppl_values) if ppl_values else float("nan")
        rows.append(
            StrategyRow(
                strategy=report.strategy,
                coverage=coverage,
                mean_ppl=mean_ppl,
                runtime_s=report.runtime_seconds,
            )
        )
        per_sentence[report.strategy] = ppl_values
        index_sets.append(set(indices))
        report.metrics = {
            "in_domain_bigram_coverage": coverage,
            "mean_in_domain_perplexity": mean_ppl,
        }

    overlap = [
        [_jaccard(a, b) for b in index_sets]
        for a in index_sets
    ]
    return Comparison(
        rows=rows,
        overlap=overlap,
        fixture=out_domain.source_path,
        per_sentence_ppl=per_sentence,
    )


def write_comparison(comparison: Comparison, json_path: str | Path) -> Path:
    """Write the JSON report and a CSV of the rows next to it."""
    json_path = Path(json_path)
    json_path.write_text(
        json.dumps(comparison.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    csv_path = json_path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "coverage", "mean_ppl", "runtime_s"])
        for row in comparison.rows:
            writer.writerow(
                [
                    row.strategy,
                    f"{row.coverage:.9g}",
                    f"{row.mean_ppl:.9g}",
                    "" if row.runtime_s is None else f"{row.runtime_s:.9g}",
                ]
            )
    logger.info("wrote comparison to %s and %s", json_path, csv_path)
    return csv_path
