"""HSD1 dump writer/reader.

Byte layout (little-endian):

    magic   4 bytes  b"HSD1"
    u32     version = 1
    u32     num_docs
    u16     num_layer_slices   (embedding layer + every encoder layer)
    u16     hidden_dim
    per document, in corpus order:
        u64  doc_id
        u16  num_tokens        (padding stripped; token 0 = sequence start)
        f32  num_layer_slices * num_tokens * hidden_dim, (layer, token, dim)

Values are stored as f32 regardless of inference precision.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterator

import numpy as np

MAGIC = b"HSD1"
VERSION = 1
_HEADER = struct.Struct("<4sIIHH")
_DOC = struct.Struct("<QH")


class DumpError(IOError):
    """Missing, truncated, or malformed dump file."""


class DumpWriter:
    """Append-only sequential writer; single-threaded by design."""

    def __init__(self, path: str | Path, num_docs: int, num_layer_slices: int, hidden_dim: int):
        if num_docs < 1 or num_layer_slices < 1 or hidden_dim < 1:
            raise ValueError("dump dimensions must be positive")
        self.path = Path(path)
        self.num_docs = num_docs
        self.num_layer_slices = num_layer_slices
        self.hidden_dim = hidden_dim
        self._written = 0
        self._fh = open(self.path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, num_docs, num_layer_slices, hidden_dim))

    def write_doc(self, doc_id: int, states: np.ndarray) -> None:
        states = np.ascontiguousarray(states, dtype="<f4")
        if states.shape[0] != self.num_layer_slices or states.shape[2] != self.hidden_dim:
            raise ValueError(
                f"doc {doc_id}: states shape {states.shape} does not match dump "
                f"({self.num_layer_slices}, ., {self.hidden_dim})"
            )
        if states.shape[1] < 1:
            raise ValueError(f"doc {doc_id}: at least one token required")
        if not np.all(np.isfinite(states)):
            raise ValueError(f"doc {doc_id}: non-finite hidden states")
        if self._written >= self.num_docs:
            raise ValueError("more documents written than declared in the header")
        self._fh.write(_DOC.pack(doc_id, states.shape[1]))
        self._fh.write(states.tobytes())
        self._written += 1

    def close(self) -> None:
        self._fh.close()
        if self._written != self.num_docs:
            raise ValueError(
                f"header declares {self.num_docs} documents but {self._written} were written"
            )

    def __enter__(self) -> "DumpWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


class DumpReader:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise DumpError(f"dump not found: {self.path}")
        with open(self.path, "rb") as fh:
            header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise DumpError(f"{self.path}: truncated header")
        magic, version, num_docs, slices, dim = _HEADER.unpack(header)
        if magic != MAGIC or version != VERSION:
            raise DumpError(f"{self.path}: not an HSD1 v{VERSION} file")
        self.num_docs = num_docs
        self.num_layer_slices = slices
        self.hidden_dim = dim

    def iter_docs(self) -> Iterator[tuple[int, np.ndarray]]:
        with open(self.path, "rb") as fh:
            fh.seek(_HEADER.size)
            for index in range(self.num_docs):
                rec = fh.read(_DOC.size)
                if len(rec) < _DOC.size:
                    raise DumpError(f"{self.path}: truncated record at doc index {index}")
                doc_id, num_tokens = _DOC.unpack(rec)
                count = self.num_layer_slices * num_tokens * self.hidden_dim
                buf = fh.read(4 * count)
                if len(buf) < 4 * count:
                    raise DumpError(f"{self.path}: truncated tensor at doc index {index}")
                states = np.frombuffer(buf, dtype="<f4").reshape(
                    self.num_layer_slices, num_tokens, self.hidden_dim
                )
                yield doc_id, states.copy()

    def read_all(self) -> list[tuple[int, np.ndarray]]:
        return list(self.iter_docs())
