"""Domain-adaptive corpus selection toolkit.

Ranks and selects sentences from a large general-domain corpus using a
small domain-specific corpus as the adaptation signal, with a family of
selection strategies (frequency, retrieval, language-model, and
graph-ranking based) behind one request/report interface, plus proxy
metrics for comparing them.
"""

from .corpus_io import (
    Corpus,
    CorpusFormat,
    CorpusStats,
    Origin,
    SentenceRecord,
    load_corpus,
    read_manifest,
    subset,
    tokenize,
    write_selection,
)
from .errors import (
    CorpusSelectError,
    EmbeddingDimensionMismatchError,
    EmbeddingServiceUnavailableError,
    EmptyCorpusError,
    EmptySelectionError,
    MalformedLineError,
    MalformedResponseError,
    MismatchedCorporaError,
    MissingManifestError,
    ShortfallWarning,
    UnknownStrategyError,
    Utf8Error,
)
from .evaluate import (
    Comparison,
    compare_strategies,
    coverage_metric,
    perplexity_metric,
    write_comparison,
)
from .graph import (
    PageRankConfig,
    PageRankResult,
    SimilarityGraph,
    build_graph,
    pagerank,
    rank_nodes,
)
from .lm import (
    BigramLM,
    cross_entropy,
    cross_entropy_difference,
    dump_lm,
    fit_bigram_lm,
    load_lm,
    perplexity,
    sequence_log_prob,
)
from .ngrams import NGramTable, count_ngrams, iter_ngrams, top_k_ngrams
from .similarity import SimilarityBackend, embed_batch, mine_pairs
from .strategies import (
    REGISTRY,
    SelectionReport,
    SelectionRequest,
    StrategyParams,
    run_selection,
)
from .tfidf import (
    IdfVariant,
    TfIdfIndex,
    build_index,
    cosine_similarity,
    knn_retrieve,
    vectorize_query,
)

__version__ = "0.1.0"
