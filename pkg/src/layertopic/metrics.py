"""Topic coherence (NPMI) and topic diversity.

Word probabilities are estimated as boolean occurrence rates over sliding
windows: each tokenized reference document of length m contributes
m - window + 1 windows (one window if 0 < m < window, none if empty).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, MetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricParams:
    coherence_top_n: int = 10
    diversity_top_k: int = 25
    window: int = 10
    #: 'floor' scores zero-co-occurrence pairs as -1 (the NPMI limit);
    #: 'epsilon' substitutes a tiny joint probability for cross-tool comparison.
    zero_pair_mode: str = "floor"
    epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.window < 1:
            raise InvalidInputError(f"window must be >= 1, got {self.window}")
        if self.zero_pair_mode not in ("floor", "epsilon"):
            raise InvalidInputError(f"unknown zero_pair_mode {self.zero_pair_mode!r}")


def window_cooccurrence_counts(
    token_docs: Sequence[Sequence[str]],
    candidates: Sequence[str],
    window: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Count windows containing each candidate word and each word pair.

    Returns (word_counts[C], joint_counts[C, C], num_windows). The joint
    matrix is symmetric with word counts on its diagonal.
    """
    index = {w: i for i, w in enumerate(candidates)}
    C = len(index)
    word = np.zeros(C, dtype=np.int64)
    joint = np.zeros((C, C), dtype=np.int64)
    total = 0
    for tokens in token_docs:
        m = len(tokens)
        if m == 0:
            continue
        ids = np.fromiter((index.get(t, -1) for t in tokens), dtype=np.int64, count=m)
        if m <= window:
            present = np.unique(ids[ids >= 0])
            total += 1
            if present.size:
                word[present] += 1
                joint[np.ix_(present, present)] += 1
        else:
            n_windows = m - window + 1
            total += n_windows
            hit = ids >= 0
            if not hit.any():
                continue
            # indicator (C, m) -> per-window presence via prefix sums
            ind = np.zeros((C, m), dtype=np.int32)
            ind[ids[hit], np.nonzero(hit)[0]] = 1
            prefix = np.zeros((C, m + 1), dtype=np.int32)
            np.cumsum(ind, axis=1, out=prefix[:, 1:])
            # window starting at s covers tokens [s, s+window)
            present = (prefix[:, window:] - prefix[:, :n_windows]) > 0
            presf = present.astype(np.int64)
            word += presf.sum(axis=1)
            joint += presf @ presf.T
    return word, joint, total


def _pair_npmi(n_i: int, n_j: int, n_ij: int, total: int, params: MetricParams) -> float:
    """NPMI from integer window counts.

    Boundary cases resolve in exact integer arithmetic: zero co-occurrence is
    -1 (or epsilon-smoothed), n_ij == n_i == n_j is the perfect-co-occurrence
    value 1, and n_ij * total == n_i * n_j is exact independence, 0.
    """
    if n_ij == 0:
        if params.zero_pair_mode == "floor":
            return -1.0
        p_i, p_j, p_ij = n_i / total, n_j / total, params.epsilon
        return float(np.log(p_ij / (p_i * p_j)) / -np.log(p_ij))
    if n_ij == total or (n_ij == n_i and n_ij == n_j):
        return 1.0
    if n_ij * total == n_i * n_j:
        return 0.0
    p_i, p_j, p_ij = n_i / total, n_j / total, n_ij / total
    return float(np.log(p_ij / (p_i * p_j)) / -np.log(p_ij))


def npmi_coherence(
    topics: Sequence[Sequence[str]],
    reference_docs: Sequence[Sequence[str]],
    params: MetricParams = MetricParams(),
) -> float:
    """Mean NPMI over all word pairs of each topic, then over topics.

    ``topics`` holds ranked top-word lists (the first coherence_top_n words
    are scored); ``reference_docs`` is the tokenized corpus used to estimate
    probabilities. Topic words absent from the reference vocabulary are
    skipped; topics left with fewer than two usable words are skipped. Both
    skips log a warning.
    """
    if not reference_docs or all(len(d) == 0 for d in reference_docs):
        raise InvalidInputError("empty reference corpus")
    if not topics:
        raise MetricError("no topics to score")

    topic_words = [list(dict.fromkeys(t[: params.coherence_top_n])) for t in topics]
    candidates = sorted({w for words in topic_words for w in words})
    word, joint, total = window_cooccurrence_counts(reference_docs, candidates, params.window)
    if total == 0:
        raise InvalidInputError("reference corpus produced no windows")
    idx = {w: i for i, w in enumerate(candidates)}

    topic_scores: list[float] = []
    skipped_words = 0
    skipped_topics = 0
    for t, words in enumerate(topic_words):
        usable = [w for w in words if word[idx[w]] > 0]
        skipped_words += len(words) - len(usable)
        if len(usable) < 2:
            skipped_topics += 1
            continue
        pair_scores = []
        for a in range(len(usable)):
            ia = idx[usable[a]]
            for b in range(a + 1, len(usable)):
                ib = idx[usable[b]]
                pair_scores.append(
                    _pair_npmi(int(word[ia]), int(word[ib]), int(joint[ia, ib]), total, params)
                )
        topic_scores.append(float(np.mean(pair_scores)))
    if skipped_words:
        logger.warning("npmi: skipped %d topic word(s) absent from the reference vocabulary", skipped_words)
    if skipped_topics:
        logger.warning("npmi: skipped %d topic(s) with fewer than 2 usable words", skipped_topics)
    if not topic_scores:
        raise MetricError("no topic had >= 2 words present in the reference corpus")
    return float(np.mean(topic_scores))


def topic_diversity(topics: Sequence[Sequence[str]], top_k: int = 25) -> float:
    """Fraction of unique words in the union of all topics' top_k word lists."""
    if not topics:
        raise MetricError("no topics to score")
    if top_k < 1:
        raise InvalidInputError(f"top_k must be >= 1, got {top_k}")
    union: set[str] = set()
    for t, words in enumerate(topics):
        head = list(words[:top_k])
        if len(head) < top_k or len(set(head)) < top_k:
            raise MetricError(
                f"topic {t} supplies {len(set(head))} distinct scored terms, needs {top_k}"
            )
        union.update(head)
    return len(union) / (top_k * len(topics))
