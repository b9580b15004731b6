"""Run configuration: defaults, config-file parsing, and precedence.

Precedence, highest first: command-line flag, config file, environment
(embedding endpoint only), built-in default. The resolved mapping is
fully explicit (every key has a concrete value) and is echoed verbatim
into selection manifests.

Config files are plain text, one ``key = value`` per line. Keys use
dotted sections (``pagerank.damping = 0.9``); blank lines and lines
starting with ``#`` are ignored. Values are parsed per key: integers,
floats, booleans (true/false/yes/no/1/0), or strings; ``none`` clears
an optional key.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

from .corpus_io import CorpusFormat
from .errors import CorpusSelectError
from .graph import PageRankConfig
from .similarity import EMBED_URL_ENV, SimilarityBackend
from .strategies import StrategyParams
from .tfidf import IdfVariant


class ConfigError(CorpusSelectError):
    """Bad config file syntax, unknown key, or unparsable value."""


_BOOL_WORDS = {
    "true": True,
    "yes": True,
    "1": True,
    "false": False,
    "no": False,
    "0": False,
}

# key -> (type tag, default, allows none)
SCHEMA: dict[str, tuple[str, Any, bool]] = {
    "strategy": ("str", None, True),
    "in_domain": ("str", None, True),
    "out_domain": ("str", None, True),
    "output": ("str", None, True),
    "format": ("str", "plain", False),
    "n": ("int", None, True),
    "seed": ("int", 42, False),
    "threads": ("int", None, True),
    "log_level": ("str", "info", False),
    "in_limit": ("int", None, True),
    "out_limit": ("int", None, True),
    "ngram.order": ("int", 2, False),
    "ngram.adaptive": ("bool", True, False),
    "textgram.top_bigrams": ("int", 100, False),
    "textgram.in_domain_cap": ("int", None, True),
    "knn.k": ("int", 10, False),
    "tfidf.idf": ("str", "ratio", False),
    "lm.smoothing_k": ("float", 1.0, False),
    "lm.unk_cutoff": ("int", 1, False),
    "ce.difference": ("bool", False, False),
    "ce.out_sample": ("int", 100_000, False),
    "similarity.backend": ("str", "lexical-tfidf", False),
    "similarity.threshold": ("float", 0.5, False),
    "similarity.top_pairs": ("int", None, True),
    "similarity.block_size": ("int", 2048, False),
    "embedding.endpoint": ("str", None, True),
    "embedding.batch_size": ("int", 64, False),
    "embedding.timeout": ("float", 30.0, False),
    "pagerank.damping": ("float", 0.85, False),
    "pagerank.tolerance": ("float", 1e-6, False),
    "pagerank.max_iterations": ("int", 100, False),
}


def _coerce(key: str, raw: str) -> Any:
    kind, _default, allows_none = SCHEMA[key]
    if allows_none and raw.lower() in ("none", "null"):
        return None
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _BOOL_WORDS[raw.lower()]
    except (ValueError, KeyError):
        raise ConfigError(f"cannot parse {key} = {raw!r} as {kind}") from None
    return raw


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Read ``key = value`` lines into a typed mapping."""
    values: dict[str, Any] = {}
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def resolve(
    cli_values: dict[str, Any] | None = None,
    config_path: str | Path | None = None,
) -> dict[str, Any]:
    """Materialize every key via flag > file > environment > default."""
    resolved = {key: default for key, (_kind, default, _opt) in SCHEMA.items()}
    env_endpoint = os.environ.get(EMBED_URL_ENV)
    if env_endpoint:
        resolved["embedding.endpoint"] = env_endpoint
    if config_path is not None:
        resolved.update(parse_config_file(config_path))
    for key, value in (cli_values or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            resolved[key] = value
    if resolved["threads"] is None:
        resolved["threads"] = os.cpu_count() or 1
    return resolved


def corpus_format(resolved: dict[str, Any]) -> CorpusFormat:
    try:
        return CorpusFormat(resolved["format"])
    except ValueError:
        raise ConfigError(
            f"format must be one of {[f.value for f in CorpusFormat]}, "
            f"got {resolved['format']!r}"
        ) from None


def strategy_params(resolved: dict[str, Any]) -> StrategyParams:
    """Build the strategy-level parameter object from a resolved mapping."""
    try:
        idf = IdfVariant(resolved["tfidf.idf"])
    except ValueError:
        raise ConfigError(
            f"tfidf.idf must be 'ratio' or 'log', got {resolved['tfidf.idf']!r}"
        ) from None
    try:
        backend = SimilarityBackend(
            kind=resolved["similarity.backend"],
            threshold=resolved["similarity.threshold"],
            top_pairs=resolved["similarity.top_pairs"],
            block_size=resolved["similarity.block_size"],
            endpoint=resolved["embedding.endpoint"],
            batch_size=resolved["embedding.batch_size"],
            timeout=resolved["embedding.timeout"],
        )
        pr_config = PageRankConfig(
            damping=resolved["pagerank.damping"],
            tolerance=resolved["pagerank.tolerance"],
            max_iterations=resolved["pagerank.max_iterations"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return StrategyParams(
        ngram_order=resolved["ngram.order"],
        adaptive=resolved["ngram.adaptive"],
        top_bigram_count=resolved["textgram.top_bigrams"],
        in_domain_cap=resolved["textgram.in_domain_cap"],
        knn_k=resolved["knn.k"],
        idf_variant=idf,
        smoothing_k=resolved["lm.smoothing_k"],
        unk_cutoff=resolved["lm.unk_cutoff"],
        ce_difference=resolved["ce.difference"],
        out_lm_sample=resolved["ce.out_sample"],
        similarity=backend,
        pagerank=pr_config,
        threads=resolved["threads"],
    )
