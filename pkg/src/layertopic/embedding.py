"""Document embeddings from per-layer transformer hidden states.

A document arrives as a stack of layer slices (embedding layer output at
index 0, encoder outputs above it), each of shape (num_tokens, hidden_dim).
An embedding configuration picks one of six layer aggregations and one of
three token poolings; aggregation runs first, per token, and pooling then
collapses the token axis. Sums and means accumulate in float64 and round
back to float32, the dump precision.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigurationError, InvalidInputError


class AggregationMode(Enum):
    """How layer slices combine into one token matrix."""

    LAST_LAYER = "last_layer"
    EMBEDDING_LAYER = "embedding_layer"
    SECOND_LAST_LAYER = "second_last_layer"
    SUM_LAST_FOUR = "sum_last_four"
    CONCAT_LAST_FOUR = "concat_last_four"
    SUM_ALL_LAYERS = "sum_all_layers"


class PoolingStrategy(Enum):
    """How a token matrix collapses to one document vector."""

    MEAN = "mean"
    MAX = "max"
    CLS = "cls"


#: Modes that read the last four encoder layers and therefore need >= 5 slices.
_LAST_FOUR_MODES = frozenset({AggregationMode.SUM_LAST_FOUR, AggregationMode.CONCAT_LAST_FOUR})


@dataclass(frozen=True)
class EmbeddingConfig:
    """One of the 18 (aggregation, pooling) experiment configurations."""

    aggregation: AggregationMode = AggregationMode.LAST_LAYER
    pooling: PoolingStrategy = PoolingStrategy.MEAN

    def tag(self) -> str:
        return f"{self.aggregation.value}+{self.pooling.value}"

    @classmethod
    def from_tag(cls, tag: str) -> "EmbeddingConfig":
        try:
            agg, pool = tag.split("+")
            return cls(AggregationMode(agg), PoolingStrategy(pool))
        except ValueError as exc:
            raise ConfigurationError(f"unknown embedding config tag {tag!r}") from exc

    def output_width(self, hidden_dim: int) -> int:
        if self.aggregation is AggregationMode.CONCAT_LAST_FOUR:
            return 4 * hidden_dim
        return hidden_dim

    @classmethod
    def all_configs(cls) -> list["EmbeddingConfig"]:
        """All 18 configurations, in aggregation-major order."""
        return [cls(a, p) for a in AggregationMode for p in PoolingStrategy]


DEFAULT_CONFIG = EmbeddingConfig(AggregationMode.LAST_LAYER, PoolingStrategy.MEAN)


@dataclass
class HiddenStateDoc:
    """Per-layer, per-token activations for one document.

    ``states`` has shape (num_layer_slices, num_tokens, hidden_dim) where
    slice 0 is the embedding-layer output and the last slice is the final
    encoder output. Token 0 is the sequence-start (CLS) token; padding is
    stripped before the dump is written, so every stored token is real.
    """

    doc_id: int
    states: np.ndarray

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=np.float32)
        if self.states.ndim != 3:
            raise InvalidInputError(
                f"doc {self.doc_id}: states must be (layers, tokens, dim), got shape {self.states.shape}"
            )
        if self.num_tokens < 1:
            raise InvalidInputError(f"doc {self.doc_id}: needs at least one token")

    @property
    def num_layer_slices(self) -> int:
        return self.states.shape[0]

    @property
    def num_tokens(self) -> int:
        return self.states.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.states.shape[2]

    def validate(self) -> None:
        if not np.all(np.isfinite(self.states)):
            raise InvalidInputError(f"doc {self.doc_id}: non-finite hidden-state values")


@dataclass
class EmbeddingMatrix:
    """Document embeddings for one configuration, one row per doc_id."""

    data: np.ndarray
    doc_ids: list[int]
    config: EmbeddingConfig

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)

    @property
    def num_docs(self) -> int:
        return self.data.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        if self.data.ndim != 2:
            raise InvalidInputError("embedding matrix must be 2-D")
        if len(self.doc_ids) != self.data.shape[0]:
            raise InvalidInputError("doc_ids length must match the row count")
        if not np.all(np.isfinite(self.data)):
            raise InvalidInputError("embedding matrix contains non-finite entries")


def aggregate_layers(doc: HiddenStateDoc, mode: AggregationMode) -> np.ndarray:
    """Combine layer slices into one (num_tokens, d') token matrix.

    d' is 4*hidden_dim for CONCAT_LAST_FOUR and hidden_dim otherwise.
    Elementwise sums accumulate in float64 and are cast back to float32.
    """
    states = doc.states
    last = doc.num_layer_slices - 1
    if mode in _LAST_FOUR_MODES and doc.num_layer_slices < 5:
        raise ConfigurationError(
            f"{mode.value} needs at least 5 layer slices "
            f"(embedding layer + 4 encoder layers), got {doc.num_layer_slices}"
        )
    if mode is AggregationMode.SECOND_LAST_LAYER and doc.num_layer_slices < 2:
        raise ConfigurationError(
            f"{mode.value} needs at least 2 layer slices, got {doc.num_layer_slices}"
        )

    if mode is AggregationMode.LAST_LAYER:
        return states[last]
    if mode is AggregationMode.EMBEDDING_LAYER:
        return states[0]
    if mode is AggregationMode.SECOND_LAST_LAYER:
        return states[last - 1]
    if mode is AggregationMode.SUM_LAST_FOUR:
        return states[last - 3 : last + 1].sum(axis=0, dtype=np.float64).astype(np.float32)
    if mode is AggregationMode.CONCAT_LAST_FOUR:
        # lowest-to-highest layer order, pinned for reproducibility
        return np.concatenate([states[last - 3], states[last - 2], states[last - 1], states[last]], axis=1)
    if mode is AggregationMode.SUM_ALL_LAYERS:
        return states.sum(axis=0, dtype=np.float64).astype(np.float32)
    raise ConfigurationError(f"unknown aggregation mode {mode!r}")


def pool(tokens: np.ndarray, strategy: PoolingStrategy) -> np.ndarray:
    """Collapse a (T, d') token matrix to a single (d',) vector."""
    tokens = np.asarray(tokens)
    if tokens.ndim != 2 or tokens.shape[0] < 1:
        raise InvalidInputError("pooling needs a non-empty (tokens, dim) matrix")
    if strategy is PoolingStrategy.MEAN:
        return tokens.mean(axis=0, dtype=np.float64).astype(np.float32)
    if strategy is PoolingStrategy.MAX:
        return tokens.max(axis=0)
    if strategy is PoolingStrategy.CLS:
        return tokens[0]
    raise ConfigurationError(f"unknown pooling strategy {strategy!r}")


def embed_document(doc: HiddenStateDoc, config: EmbeddingConfig) -> np.ndarray:
    """Embed one document: aggregate across layers, then pool across tokens."""
    return pool(aggregate_layers(doc, config.aggregation), config.pooling)


def embed_corpus(
    dump: "Iterable[HiddenStateDoc] | DumpLike",
    config: EmbeddingConfig,
    workers: int = 1,
    chunk: int = 256,
) -> EmbeddingMatrix:
    """Embed every document of a dump under one configuration.

    Rows are ordered by doc_id. Documents stream through in chunks because a
    full-scale dump is far larger than memory; each embedding is a pure
    function of its states and lands in a pre-assigned row slot, so the
    output is bitwise identical for any ``workers`` count. Reader-backed
    dumps (exposing num_docs) must carry dense doc_ids 0..n-1, the corpus
    contract; plain iterables may use arbitrary unique ids.
    """
    docs = dump.iter_docs() if hasattr(dump, "iter_docs") else iter(dump)
    known_n = getattr(dump, "num_docs", None)

    out: np.ndarray | None = None
    loose_rows: dict[int, np.ndarray] = {}
    seen: set[int] = set()

    def flush(batch: list[HiddenStateDoc]) -> None:
        nonlocal out
        if workers <= 1:
            vectors = [embed_document(d, config) for d in batch]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool_:
                vectors = list(pool_.map(lambda d: embed_document(d, config), batch))
        for doc, vec in zip(batch, vectors):
            if doc.doc_id in seen:
                raise InvalidInputError(f"duplicate doc_id {doc.doc_id} in dump")
            seen.add(doc.doc_id)
            if known_n is None:
                loose_rows[doc.doc_id] = vec
                continue
            if not 0 <= doc.doc_id < known_n:
                raise InvalidInputError(
                    f"doc_id {doc.doc_id} outside the dense range [0, {known_n})"
                )
            if out is None:
                out = np.empty((known_n, vec.shape[0]), dtype=np.float32)
            out[doc.doc_id] = vec

    batch: list[HiddenStateDoc] = []
    for doc in docs:
        batch.append(doc)
        if len(batch) >= chunk:
            flush(batch)
            batch = []
    if batch:
        flush(batch)

    if not seen:
        raise InvalidInputError("dump contains no documents")
    if known_n is not None:
        if len(seen) != known_n:
            raise InvalidInputError(
                f"dump header declares {known_n} documents but {len(seen)} were read"
            )
        doc_ids = list(range(known_n))
    else:
        doc_ids = sorted(loose_rows)
        out = np.stack([loose_rows[i] for i in doc_ids])
    matrix = EmbeddingMatrix(out, doc_ids, config)
    matrix.validate()
    return matrix


class DumpLike:
    """Anything exposing iter_docs() -> Iterator[HiddenStateDoc]."""

    def iter_docs(self) -> Iterator[HiddenStateDoc]:  # pragma: no cover - protocol stub
        raise NotImplementedError
