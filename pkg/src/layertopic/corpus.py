"""Corpus ingestion, tokenization, stop-word removal, and term counts."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, InvalidInputError, SchemaError

logger = logging.getLogger(__name__)

#: sha256 of the vendored stop-word file; loading re-verifies it so every run
#: uses the exact same 179-word list.
STOPWORDS_SHA256 = "4cb65a2b483e5acbdb2a2cd5f48182e06eba29df72adea7d9ab35acb67641622"

# Maximal runs of letters/digits (unicode, underscore excluded).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass
class Document:
    doc_id: int
    raw_text: str
    timestamp: int | None = None


@dataclass(frozen=True)
class StopList:
    words: frozenset[str]
    source: str

    def __post_init__(self) -> None:
        for w in self.words:
            if w != w.lower() or any(ch.isspace() for ch in w):
                raise InvalidInputError(f"stop list {self.source}: bad entry {w!r}")

    def __contains__(self, word: str) -> bool:
        return word in self.words


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of letters/digits; tokens shorter than 2 are dropped."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def load_stoplist(path: str | Path, expected_sha256: str | None = None) -> StopList:
    """Load a one-word-per-line stop list ('#' comments allowed)."""
    path = Path(path)
    data = path.read_bytes()
    if expected_sha256 is not None:
        digest = hashlib.sha256(data).hexdigest()
        if digest != expected_sha256:
            raise InvalidInputError(
                f"stop list {path} checksum mismatch: got {digest}, expected {expected_sha256}"
            )
    words = []
    for line in data.decode("utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return StopList(words=frozenset(words), source=str(path))


def default_stoplist() -> StopList:
    """The vendored English stop-word list, checksum-verified."""
    ref = resources.files("layertopic").joinpath("data/stopwords_en.txt")
    with resources.as_file(ref) as path:
        return load_stoplist(path, expected_sha256=STOPWORDS_SHA256)


def remove_stopwords(text: str, stoplist: StopList) -> str:
    """Drop stop-word tokens and re-join the survivors with single spaces.

    Tokenization (lowercasing, length filter) is applied first, so the result
    is idempotent under repeated application.
    """
    return " ".join(t for t in tokenize(text) if t not in stoplist)


def load_corpus(
    path: str | Path,
    text_column: str,
    time_column: str | None = None,
    delimiter: str = ",",
) -> list[Document]:
    """Load documents from a delimited file or line-delimited JSON records.

    Files ending in .jsonl/.ndjson are parsed as one JSON object per line;
    everything else goes through the csv reader (quoted fields supported).
    Documents keep file order and get dense ids from 0. Rows with empty text
    are kept and counted in a warning.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"corpus file not found: {path}")

    rows: list[dict]
    if path.suffix.lower() in {".jsonl", ".ndjson"}:
        rows = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}: bad JSON at line {i + 1}: {exc}") from exc
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter=delimiter)
            fields = reader.fieldnames or []
            for col in (text_column, time_column):
                if col is not None and col not in fields:
                    raise SchemaError(f"{path}: missing column {col!r} (have {fields})")
            rows = list(reader)

    docs: list[Document] = []
    empty = 0
    for row_num, row in enumerate(rows, start=1):
        if text_column not in row:
            raise SchemaError(f"{path}: missing column {text_column!r} (row {row_num})")
        text = row[text_column]
        if text is None:
            text = ""
        timestamp = None
        if time_column is not None:
            if time_column not in row:
                raise SchemaError(f"{path}: missing column {time_column!r} (row {row_num})")
            raw = row[time_column]
            try:
                timestamp = int(str(raw).strip())
            except (TypeError, ValueError) as exc:
                raise SchemaError(
                    f"{path}: unparseable timestamp {raw!r} at row {row_num}"
                ) from exc
        if not str(text).strip():
            empty += 1
        docs.append(Document(doc_id=len(docs), raw_text=str(text), timestamp=timestamp))
    if empty:
        logger.warning("%s: %d row(s) with empty text kept", path, empty)
    return docs


@dataclass
class DocTermCounts:
    """Sorted vocabulary plus a sparse (num_docs x vocab) raw count matrix."""

    vocab: list[str]
    counts: sp.csr_matrix

    @property
    def num_docs(self) -> int:
        return self.counts.shape[0]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def term_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.vocab)}


def build_doc_term(
    docs: Sequence[Document] | Sequence[str],
    min_df: int = 1,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> DocTermCounts:
    """Count terms per document; vocabulary keeps terms in >= min_df documents."""
    if min_df < 1:
        raise ConfigurationError(f"min_df must be >= 1, got {min_df}")
    texts = [d.raw_text if isinstance(d, Document) else d for d in docs]
    token_docs = [tokenizer(t) for t in texts]

    df: dict[str, int] = {}
    for tokens in token_docs:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    vocab = sorted(t for t, n in df.items() if n >= min_df)
    if not vocab:
        raise ConfigurationError(
            f"empty vocabulary at min_df={min_df}; lower min_df or check the tokenizer"
        )
    index = {t: i for i, t in enumerate(vocab)}

    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for tokens in token_docs:
        counts: dict[int, int] = {}
        for term in tokens:
            j = index.get(term)
            if j is not None:
                counts[j] = counts.get(j, 0) + 1
        for j in sorted(counts):
            indices.append(j)
            data.append(counts[j])
        indptr.append(len(indices))
    matrix = sp.csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(token_docs), len(vocab)),
    )
    return DocTermCounts(vocab=vocab, counts=matrix)
