"""Configurable-embedding topic modeling: per-layer hidden states in,
coherence/diversity benchmark tables out."""

from .clusterer import ClusterParams, Labeling, cluster
from .corpus import Document, StopList, build_doc_term, default_stoplist, load_corpus, remove_stopwords, tokenize
from .embedding import (
    DEFAULT_CONFIG,
    AggregationMode,
    EmbeddingConfig,
    EmbeddingMatrix,
    HiddenStateDoc,
    PoolingStrategy,
    aggregate_layers,
    embed_corpus,
    embed_document,
    pool,
)
from .formats import DumpReader, read_embeddings, write_dump, write_embeddings
from .harness import DatasetSpec, GridSpec, Runner, RunRecord, build_report, emit_plot_data, render_report, run_grid
from .metrics import MetricParams, npmi_coherence, topic_diversity
from .reducer import ReducerParams, fuzzy_graph, knn_graph, optimize_layout, reduce
from .topic_model import (
    FitParams,
    TimeSlicedTopics,
    TopicModel,
    ctfidf,
    fit,
    reduce_topics,
    top_words,
    topics_over_time,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationMode",
    "ClusterParams",
    "DEFAULT_CONFIG",
    "DatasetSpec",
    "Document",
    "DumpReader",
    "EmbeddingConfig",
    "EmbeddingMatrix",
    "FitParams",
    "GridSpec",
    "HiddenStateDoc",
    "Labeling",
    "MetricParams",
    "PoolingStrategy",
    "ReducerParams",
    "RunRecord",
    "Runner",
    "StopList",
    "TimeSlicedTopics",
    "TopicModel",
    "aggregate_layers",
    "build_doc_term",
    "build_report",
    "cluster",
    "ctfidf",
    "default_stoplist",
    "embed_corpus",
    "embed_document",
    "emit_plot_data",
    "fit",
    "fuzzy_graph",
    "knn_graph",
    "load_corpus",
    "npmi_coherence",
    "optimize_layout",
    "pool",
    "read_embeddings",
    "reduce",
    "reduce_topics",
    "remove_stopwords",
    "render_report",
    "run_grid",
    "tokenize",
    "top_words",
    "topic_diversity",
    "topics_over_time",
    "write_dump",
    "write_embeddings",
]
