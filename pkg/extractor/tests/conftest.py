"""A tiny local BERT-style encoder so tests never touch the network."""

from __future__ import annotations

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + ["the", "planet", "orbit", "music", "violin", "glacier", "river", "bright", "deep",
       "sound", "stone", "light", "wave", "field", "quiet", "storm"]
    + ["##s", "##ing", "##ed"]
)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    torch.manual_seed(7)
    path = tmp_path_factory.mktemp("tinybert")
    (path / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(path / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(path)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def probe_sentences() -> list[str]:
    return [
        "the planet orbit",
        "music violin sound",
        "glacier river deep",
        "bright light wave storm",
        "quiet stone field",
    ]
