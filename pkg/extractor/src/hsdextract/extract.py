"""Run a sentence-encoder with all hidden states exposed and write HSD1 dumps.

The dump stores, per document, the embedding-layer output plus every encoder
layer's output (num_layers + 1 slices), padding stripped, token 0 being the
sequence-start token. Documents longer than max_tokens are truncated, not
chunked, matching standard sentence-encoder behavior.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .hsd1 import DumpWriter

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "sentence-transformers/all-mpnet-base-v2"


@dataclass(frozen=True)
class ExtractionSpec:
    input: str
    output: str
    model_id: str = DEFAULT_MODEL
    max_tokens: int = 384
    batch_size: int = 32
    device: str = "cpu"
    text_column: str = "text"

    def __post_init__(self) -> None:
        if self.max_tokens < 2:
            raise ValueError(f"max_tokens must be >= 2 (CLS + one content token), got {self.max_tokens}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


class Encoder:
    """Tokenizer + model pair with hidden-state output enabled."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id, output_hidden_states=True)
        except Exception as exc:
            raise RuntimeError(f"cannot load model {model_id!r}: {exc}") from exc
        self.device = torch.device(device)
        self.model.to(self.device)
        self.model.eval()

    @property
    def num_layer_slices(self) -> int:
        return self.model.config.num_hidden_layers + 1

    @property
    def hidden_dim(self) -> int:
        return self.model.config.hidden_size

    @torch.no_grad()
    def hidden_states(self, texts: list[str], max_tokens: int) -> list[np.ndarray]:
        """Per-document (num_layer_slices, real_tokens, hidden_dim) float32."""
        encoded = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=max_tokens,
            return_tensors="pt",
        ).to(self.device)
        output = self.model(**encoded)
        stacked = torch.stack(output.hidden_states, dim=0)  # (L+1, B, T, H)
        mask = encoded["attention_mask"]
        out = []
        for i in range(len(texts)):
            real = int(mask[i].sum().item())
            if real == 0:  # degenerate tokenization: keep the sequence-start slot
                logger.warning("document produced zero tokens; keeping the sequence-start token only")
                real = 1
            out.append(stacked[:, i, :real, :].cpu().numpy().astype(np.float32))
        return out

    @torch.no_grad()
    def native_sentence_embeddings(self, texts: list[str], max_tokens: int) -> np.ndarray:
        """The encoder's own pooled sentence embeddings: attention-masked mean
        over the last layer (the standard sentence-encoder pooling)."""
        encoded = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=max_tokens,
            return_tensors="pt",
        ).to(self.device)
        output = self.model(**encoded)
        last = output.last_hidden_state
        mask = encoded["attention_mask"].unsqueeze(-1).to(last.dtype)
        summed = (last * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1)
        return (summed / counts).cpu().numpy().astype(np.float32)


def read_texts(path: str | Path, text_column: str = "text") -> list[str]:
    """Corpus loading: .txt is one document per line; .csv/.jsonl carry a
    named text column."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus not found: {path}")
    suffix = path.suffix.lower()
    if suffix in {".jsonl", ".ndjson"}:
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        return [str(r.get(text_column, "")) for r in rows]
    if suffix == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if text_column not in (reader.fieldnames or []):
                raise ValueError(f"{path}: missing column {text_column!r}")
            return [row[text_column] or "" for row in reader]
    return path.read_text(encoding="utf-8").splitlines()


def extract(spec: ExtractionSpec, encoder: Encoder | None = None, texts: list[str] | None = None) -> Path:
    """Extract hidden states for every document and write the HSD1 dump.

    Documents keep corpus order (doc_id = row index). Empty documents are
    extracted from whatever tokens the tokenizer produces (the sequence-start
    token at minimum) and logged.
    """
    if texts is None:
        texts = read_texts(spec.input, spec.text_column)
    if not texts:
        raise ValueError(f"{spec.input}: no documents to extract")
    if encoder is None:
        encoder = Encoder(spec.model_id, spec.device)

    empty = sum(1 for t in texts if not t.strip())
    if empty:
        logger.warning("%d empty document(s); their dumps hold special tokens only", empty)

    out = Path(spec.output)
    with DumpWriter(out, len(texts), encoder.num_layer_slices, encoder.hidden_dim) as writer:
        for start in range(0, len(texts), spec.batch_size):
            batch = texts[start : start + spec.batch_size]
            for offset, states in enumerate(encoder.hidden_states(batch, spec.max_tokens)):
                writer.write_doc(start + offset, states)
    logger.info("wrote %s (%d docs, %d slices, dim %d)", out, len(texts), encoder.num_layer_slices, encoder.hidden_dim)
    return out
