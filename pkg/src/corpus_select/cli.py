"""Command-line front end: load -> select -> evaluate -> write.

Exit codes: 0 success, 1 error, 2 selection shortfall (output still
written). Machine output goes to files and stdout; progress and
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from .config import corpus_format, resolve, strategy_params
from .corpus_io import (
    CorpusFormat,
    Origin,
    load_corpus,
    manifest_path_for,
    read_manifest,
    write_selection,
)
from .errors import CorpusSelectError, MismatchedCorporaError, UnknownStrategyError
from .evaluate import compare_strategies, write_comparison
from .ngrams import count_ngrams, top_k_ngrams
from .strategies import REGISTRY, SelectionRequest, report_from_manifest, run_selection

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this toolkit reserves 2 for shortfall."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


# argparse dest -> resolved-config key
_SELECT_KEYS = {
    "strategy": "strategy",
    "in_domain": "in_domain",
    "out_domain": "out_domain",
    "output": "output",
    "n": "n",
    "format": "format",
    "seed": "seed",
    "threads": "threads",
    "log_level": "log_level",
    "in_limit": "in_limit",
    "out_limit": "out_limit",
    "ngram_order": "ngram.order",
    "adaptive": "ngram.adaptive",
    "top_bigrams": "textgram.top_bigrams",
    "in_domain_cap": "textgram.in_domain_cap",
    "knn_k": "knn.k",
    "idf": "tfidf.idf",
    "smoothing_k": "lm.smoothing_k",
    "unk_cutoff": "lm.unk_cutoff",
    "ce_difference": "ce.difference",
    "ce_out_sample": "ce.out_sample",
    "similarity_backend": "similarity.backend",
    "similarity_threshold": "similarity.threshold",
    "top_pairs": "similarity.top_pairs",
    "block_size": "similarity.block_size",
    "embedding_endpoint": "embedding.endpoint",
    "embedding_batch_size": "embedding.batch_size",
    "embedding_timeout": "embedding.timeout",
    "damping": "pagerank.damping",
    "pagerank_tolerance": "pagerank.tolerance",
    "pagerank_max_iter": "pagerank.max_iterations",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument(
        "--log-level", choices=["debug", "info", "warning", "error"]
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="corpus-select", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="select out-domain sentences")
    _add_common(sel)
    sel.add_argument("--strategy", help="strategy name or 'all'")
    sel.add_argument("--in-domain", help="in-domain corpus path")
    sel.add_argument("--out-domain", help="out-domain corpus path")
    sel.add_argument("--output", help="selected-sentences output path")
    sel.add_argument("-N", "--select-count", dest="n", type=int)
    sel.add_argument("--format", choices=[f.value for f in CorpusFormat])
    sel.add_argument("--in-limit", type=int)
    sel.add_argument("--out-limit", type=int)
    sel.add_argument("--ngram-order", type=int)
    sel.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=None)
    sel.add_argument("--top-bigrams", type=int)
    sel.add_argument("--in-domain-cap", type=int)
    sel.add_argument("--knn-k", type=int)
    sel.add_argument("--idf", choices=["ratio", "log"])
    sel.add_argument("--smoothing-k", type=float)
    sel.add_argument("--unk-cutoff", type=int)
    sel.add_argument(
        "--ce-difference", action=argparse.BooleanOptionalAction, default=None
    )
    sel.add_argument("--ce-out-sample", type=int)
    sel.add_argument(
        "--similarity-backend", choices=["lexical-tfidf", "external-embedding"]
    )
    sel.add_argument("--similarity-threshold", type=float)
    sel.add_argument("--top-pairs", type=int)
    sel.add_argument("--block-size", type=int)
    sel.add_argument("--embedding-endpoint")
    sel.add_argument("--embedding-batch-size", type=int)
    sel.add_argument("--embedding-timeout", type=float)
    sel.add_argument("--damping", type=float)
    sel.add_argument("--pagerank-tolerance", type=float)
    sel.add_argument("--pagerank-max-iter", type=int)

    ev = sub.add_parser("evaluate", help="compare selection manifests")
    _add_common(ev)
    ev.add_argument("manifests", nargs="+", type=Path)
    ev.add_argument("--output", type=Path, default=Path("comparison.json"))
    ev.add_argument("--no-figures", action="store_true")
    ev.add_argument("--smoothing-k", type=float)
    ev.add_argument("--unk-cutoff", type=int)

    insp = sub.add_parser("inspect-ngrams", help="print top n-grams of a corpus")
    _add_common(insp)
    insp.add_argument("corpus", type=Path)
    insp.add_argument("--format", choices=[f.value for f in CorpusFormat])
    insp.add_argument("-n", "--order", type=int, default=2)
    insp.add_argument("-k", "--top", type=int, default=100)
    insp.add_argument("--limit", type=int)
    return parser


def _cli_values(args: argparse.Namespace) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for dest, key in _SELECT_KEYS.items():
        if hasattr(args, dest):
            values[key] = getattr(args, dest)
    return values


def _setup_logging(level_name: str) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level_name.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _strategy_output_path(base: Path, strategy: str, multi: bool) -> Path:
    if not multi:
        return base
    return base.with_name(f"{base.stem}.{strategy}{base.suffix}")


def cmd_select(args: argparse.Namespace) -> int:
    resolved = resolve(_cli_values(args), args.config)
    _setup_logging(resolved["log_level"])
    missing = [
        flag
        for flag, key in (
            ("--strategy", "strategy"),
            ("--in-domain", "in_domain"),
            ("--out-domain", "out_domain"),
            ("--output", "output"),
            ("-N/--select-count", "n"),
        )
        if resolved[key] is None
    ]
    if missing:
        print(
            f"usage: corpus-select select requires {', '.join(missing)} "
            f"(via flag or config file)",
            file=sys.stderr,
        )
        return 1

    fmt = corpus_format(resolved)
    names = list(REGISTRY) if resolved["strategy"] == "all" else [resolved["strategy"]]
    for name in names:
        if name not in REGISTRY:
            raise UnknownStrategyError(name, sorted(REGISTRY))

    in_corpus = load_corpus(
        resolved["in_domain"], fmt, Origin.IN_DOMAIN, resolved["in_limit"]
    )
    out_corpus = load_corpus(
        resolved["out_domain"], fmt, Origin.OUT_DOMAIN, resolved["out_limit"]
    )
    request = SelectionRequest(
        out_domain=out_corpus,
        in_domain=in_corpus,
        select_count=resolved["n"],
        seed=resolved["seed"],
        params=strategy_params(resolved),
    )

    base = Path(resolved["output"])
    multi = len(names) > 1
    any_shortfall = False
    for name in names:
        report = run_selection(name, request)
        report.params = {**resolved, **report.params}
        out_path = _strategy_output_path(base, name, multi)
        write_selection(report, out_corpus, out_path, fmt)
        print(
            f"{name}: {len(report.selected)} sentences -> {out_path} "
            f"(manifest {manifest_path_for(out_path).name})",
            file=sys.stderr,
        )
        any_shortfall = any_shortfall or report.shortfall
    return 2 if any_shortfall else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cli_values = {
        "lm.smoothing_k": args.smoothing_k,
        "lm.unk_cutoff": args.unk_cutoff,
        "seed": args.seed,
        "threads": args.threads,
        "log_level": args.log_level,
    }
    resolved = resolve(cli_values, args.config)
    _setup_logging(resolved["log_level"])

    manifests = [read_manifest(path) for path in args.manifests]
    needed = ("out_domain", "in_domain", "format")
    for path, manifest in zip(args.manifests, manifests):
        params = manifest.get("params", {})
        for key in needed:
            if not params.get(key):
                raise MismatchedCorporaError(
                    f"{path}: manifest params lack {key!r}; cannot locate corpora"
                )
    for key in ("out_domain", "format", "out_limit", "in_domain", "in_limit"):
        values = {m["params"].get(key) for m in manifests}
        if len(values) != 1:
            raise MismatchedCorporaError(
                f"manifests disagree on {key}: {sorted(map(str, values))}"
            )
    params = manifests[0]["params"]
    fmt = CorpusFormat(params["format"])
    out_corpus = load_corpus(
        params["out_domain"], fmt, Origin.OUT_DOMAIN, params.get("out_limit")
    )
    in_corpus = load_corpus(
        params["in_domain"], fmt, Origin.IN_DOMAIN, params.get("in_limit")
    )
    reports = [report_from_manifest(m, out_corpus) for m in manifests]
    comparison = compare_strategies(
        reports,
        in_corpus,
        smoothing_k=resolved["lm.smoothing_k"],
        unk_cutoff=resolved["lm.unk_cutoff"],
    )
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_comparison(comparison, args.output)
    if not args.no_figures:
        from .plots import save_comparison_figures

        figures = save_comparison_figures(
            comparison, args.output.parent, stem=args.output.stem
        )
        print(f"figures: {', '.join(str(p) for p in figures)}", file=sys.stderr)
    print(comparison.render_text(), end="")
    return 0


def cmd_inspect_ngrams(args: argparse.Namespace) -> int:
    resolved = resolve(
        {"seed": args.seed, "threads": args.threads, "log_level": args.log_level,
         "format": args.format},
        args.config,
    )
    _setup_logging(resolved["log_level"])
    fmt = corpus_format(resolved)
    corpus = load_corpus(args.corpus, fmt, Origin.OUT_DOMAIN, args.limit)
    table = count_ngrams(corpus, args.order)
    for gram, count in top_k_ngrams(table, args.top):
        print(f"{' '.join(gram)}\t{count}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "select": cmd_select,
        "evaluate": cmd_evaluate,
        "inspect-ngrams": cmd_inspect_ngrams,
    }
    try:
        return handlers[args.command](args)
    except (CorpusSelectError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
