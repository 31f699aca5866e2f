"""Fidelity verification: dump-derived default embeddings vs the encoder's own.

For each probe sentence, the (last layer, mean pooling) embedding computed
from the dump must match the encoder's native pooled sentence embedding at
cosine similarity >= 0.999.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .extract import Encoder
from .hsd1 import DumpError, DumpReader

PASS_THRESHOLD = 0.999


@dataclass
class FidelityReport:
    similarities: list[float] = field(default_factory=list)
    failing_indices: list[int] = field(default_factory=list)
    threshold: float = PASS_THRESHOLD

    @property
    def passed(self) -> bool:
        return not self.failing_indices

    def summary(self) -> str:
        if not self.similarities:
            return "fidelity: no probe sentences, vacuous pass"
        worst = min(self.similarities)
        status = "PASS" if self.passed else f"FAIL (sentences {self.failing_indices})"
        return f"fidelity: {status}, {len(self.similarities)} probe(s), worst cosine {worst:.6f}"


def dump_default_embeddings(dump_path: str | Path, count: int | None = None) -> np.ndarray:
    """(last layer, mean over tokens) per document, float64 accumulation."""
    reader = DumpReader(dump_path)
    rows = []
    for doc_id, states in reader.iter_docs():
        rows.append(states[-1].mean(axis=0, dtype=np.float64).astype(np.float32))
        if count is not None and len(rows) >= count:
            break
    return np.stack(rows)


def verify(
    dump_path: str | Path,
    sentences: list[str],
    encoder: Encoder,
    max_tokens: int = 384,
) -> FidelityReport:
    """Compare dump-derived default embeddings against native ones.

    The dump must have been extracted from the same sentences (same order,
    same truncation). A corrupt dump surfaces as DumpError, not a crash.
    """
    report = FidelityReport()
    if not sentences:
        return report
    dumped = dump_default_embeddings(dump_path, count=len(sentences))
    if dumped.shape[0] < len(sentences):
        raise DumpError(f"{dump_path}: fewer documents than probe sentences")
    native = encoder.native_sentence_embeddings(sentences, max_tokens)
    for i in range(len(sentences)):
        a, b = dumped[i].astype(np.float64), native[i].astype(np.float64)
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        sim = float(a @ b / denom) if denom > 0 else 0.0
        report.similarities.append(sim)
        if sim < report.threshold:
            report.failing_indices.append(i)
    return report
