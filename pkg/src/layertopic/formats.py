"""Binary file containers.

HSD1 (hidden-state dump), little-endian throughout:

    magic   4 bytes  b"HSD1"
    u32     version, currently 1
    u32     num_docs
    u16     num_layer_slices
    u16     hidden_dim
    per document, in file order:
        u64  doc_id
        u16  num_tokens
        f32  num_layer_slices * num_tokens * hidden_dim values,
             (layer, token, dim) order

EMB1 (embedding matrix):

    magic   4 bytes  b"EMB1"
    u32     num_docs
    u32     embed_dim
    u8      aggregation code (enum order: last_layer=0, embedding_layer=1,
            second_last_layer=2, sum_last_four=3, concat_last_four=4,
            sum_all_layers=5)
    u8      pooling code (mean=0, max=1, cls=2)
    f32     num_docs * embed_dim values, row-major, rows in doc_id order
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .embedding import AggregationMode, EmbeddingConfig, EmbeddingMatrix, HiddenStateDoc, PoolingStrategy
from .errors import DumpIOError, InvalidInputError

HSD1_MAGIC = b"HSD1"
EMB1_MAGIC = b"EMB1"
HSD1_VERSION = 1

_HSD1_HEADER = struct.Struct("<4sIIHH")
_HSD1_DOC = struct.Struct("<QH")
_EMB1_HEADER = struct.Struct("<4sIIBB")

_AGG_CODES = {mode: i for i, mode in enumerate(AggregationMode)}
_POOL_CODES = {strat: i for i, strat in enumerate(PoolingStrategy)}
_AGG_FROM_CODE = {i: mode for mode, i in _AGG_CODES.items()}
_POOL_FROM_CODE = {i: strat for strat, i in _POOL_CODES.items()}


def write_dump(path: str | Path, docs: Iterable[HiddenStateDoc]) -> int:
    """Write an HSD1 dump; returns the number of documents written.

    All documents must share (num_layer_slices, hidden_dim) and satisfy the
    HiddenStateDoc invariants (>= 1 token, finite values).
    """
    docs = list(docs)
    if not docs:
        raise InvalidInputError("refusing to write an empty dump")
    slices, dim = docs[0].num_layer_slices, docs[0].hidden_dim
    for doc in docs:
        doc.validate()
        if doc.num_layer_slices != slices or doc.hidden_dim != dim:
            raise InvalidInputError(
                f"doc {doc.doc_id}: shape ({doc.num_layer_slices}, ., {doc.hidden_dim}) "
                f"does not match dump shape ({slices}, ., {dim})"
            )
        if doc.num_tokens > 0xFFFF:
            raise InvalidInputError(f"doc {doc.doc_id}: num_tokens exceeds u16 range")

    with open(path, "wb") as fh:
        fh.write(_HSD1_HEADER.pack(HSD1_MAGIC, HSD1_VERSION, len(docs), slices, dim))
        for doc in docs:
            fh.write(_HSD1_DOC.pack(doc.doc_id, doc.num_tokens))
            fh.write(np.ascontiguousarray(doc.states, dtype="<f4").tobytes())
    return len(docs)


class DumpReader:
    """Sequential reader for HSD1 dumps."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise DumpIOError(f"dump file not found: {self.path}")
        with open(self.path, "rb") as fh:
            header = fh.read(_HSD1_HEADER.size)
        if len(header) < _HSD1_HEADER.size:
            raise DumpIOError(f"{self.path}: truncated header")
        magic, version, num_docs, slices, dim = _HSD1_HEADER.unpack(header)
        if magic != HSD1_MAGIC:
            raise DumpIOError(f"{self.path}: bad magic {magic!r}, expected {HSD1_MAGIC!r}")
        if version != HSD1_VERSION:
            raise DumpIOError(f"{self.path}: unsupported HSD1 version {version}")
        if num_docs < 1 or slices < 1 or dim < 1:
            raise DumpIOError(f"{self.path}: degenerate header ({num_docs} docs, {slices} slices, dim {dim})")
        self.num_docs = num_docs
        self.num_layer_slices = slices
        self.hidden_dim = dim

    def iter_docs(self) -> Iterator[HiddenStateDoc]:
        with open(self.path, "rb") as fh:
            fh.seek(_HSD1_HEADER.size)
            for index in range(self.num_docs):
                rec = fh.read(_HSD1_DOC.size)
                if len(rec) < _HSD1_DOC.size:
                    raise DumpIOError(f"{self.path}: truncated record header at doc index {index}")
                doc_id, num_tokens = _HSD1_DOC.unpack(rec)
                if num_tokens < 1:
                    raise DumpIOError(f"{self.path}: zero-token record at doc index {index}")
                count = self.num_layer_slices * num_tokens * self.hidden_dim
                buf = fh.read(4 * count)
                if len(buf) < 4 * count:
                    raise DumpIOError(f"{self.path}: truncated tensor data at doc index {index}")
                states = np.frombuffer(buf, dtype="<f4").reshape(
                    self.num_layer_slices, num_tokens, self.hidden_dim
                )
                yield HiddenStateDoc(doc_id=doc_id, states=states.copy())

    def read_all(self) -> list[HiddenStateDoc]:
        return list(self.iter_docs())


def write_embeddings(path: str | Path, matrix: EmbeddingMatrix) -> None:
    """Write an EMB1 embedding container."""
    matrix.validate()
    header = _EMB1_HEADER.pack(
        EMB1_MAGIC,
        matrix.num_docs,
        matrix.embed_dim,
        _AGG_CODES[matrix.config.aggregation],
        _POOL_CODES[matrix.config.pooling],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f4").tobytes())


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read an EMB1 embedding container; doc_ids are implicit 0..n-1."""
    path = Path(path)
    if not path.exists():
        raise DumpIOError(f"embedding file not found: {path}")
    with open(path, "rb") as fh:
        header = fh.read(_EMB1_HEADER.size)
        if len(header) < _EMB1_HEADER.size:
            raise DumpIOError(f"{path}: truncated EMB1 header")
        magic, num_docs, embed_dim, agg_code, pool_code = _EMB1_HEADER.unpack(header)
        if magic != EMB1_MAGIC:
            raise DumpIOError(f"{path}: bad magic {magic!r}, expected {EMB1_MAGIC!r}")
        try:
            config = EmbeddingConfig(_AGG_FROM_CODE[agg_code], _POOL_FROM_CODE[pool_code])
        except KeyError as exc:
            raise DumpIOError(f"{path}: unknown config tag bytes ({agg_code}, {pool_code})") from exc
        buf = fh.read(4 * num_docs * embed_dim)
    if len(buf) < 4 * num_docs * embed_dim:
        raise DumpIOError(f"{path}: truncated EMB1 payload")
    data = np.frombuffer(buf, dtype="<f4").reshape(num_docs, embed_dim).copy()
    return EmbeddingMatrix(data, list(range(num_docs)), config)
