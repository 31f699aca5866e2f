"""Stop-word removal for the "without stop words" extraction arm.

Cleaning must happen before encoding (the cleaned text is what the model
sees), and must match the evaluation side exactly: lowercased letter/digit
runs, tokens shorter than 2 dropped, stop words removed, survivors re-joined
with single spaces. The vendored list is checksum-pinned.
"""

from __future__ import annotations

import hashlib
import re
from importlib import resources

STOPWORDS_SHA256 = "4cb65a2b483e5acbdb2a2cd5f48182e06eba29df72adea7d9ab35acb67641622"
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def load_stopwords() -> frozenset[str]:
    ref = resources.files("hsdextract").joinpath("data/stopwords_en.txt")
    data = ref.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != STOPWORDS_SHA256:
        raise ValueError(f"vendored stop list checksum mismatch: {digest}")
    return frozenset(
        line.strip()
        for line in data.decode("utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    )


def remove_stopwords(text: str, stopwords: frozenset[str]) -> str:
    tokens = [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]
    return " ".join(t for t in tokens if t not in stopwords)
