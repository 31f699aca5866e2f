"""Cluster labels + document text -> topics.

Topic representation is class-based TF-IDF: for class c and term t,
W(t, c) = tf(t, c) * log(1 + A / f(t)), with tf the raw count of t in the
concatenated class-c documents, f(t) the term's total count across all
classes, and A the mean token count per class. Noise documents (label -1)
never contribute to classes or metrics.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .clusterer import ClusterParams, Labeling, cluster
from .corpus import DocTermCounts, Document, build_doc_term
from .errors import ConfigurationError, InvalidInputError, ModelError, ParameterError
from .reducer import ReducerParams, reduce, with_seed

logger = logging.getLogger(__name__)


@dataclass
class TopicModel:
    labels: Labeling
    topic_term: np.ndarray  # (num_topics, vocab)
    top_words: list[list[tuple[str, float]]]
    sizes: np.ndarray
    vocab: list[str]
    params: dict = field(default_factory=dict)
    under_count: bool = False
    degenerate_topics: frozenset[int] = frozenset()

    @property
    def num_topics(self) -> int:
        return self.topic_term.shape[0]

    @property
    def num_docs(self) -> int:
        return int(self.labels.labels.shape[0])

    def top_terms(self, k: int) -> list[list[str]]:
        """Top-k terms per topic, recomputed from topic_term when the stored
        ranked lists are shorter than k."""
        stored = len(self.top_words[0]) if self.top_words else 0
        if k <= stored:
            return [[term for term, _ in words[:k]] for words in self.top_words]
        ranked, _ = top_words(self.topic_term, self.vocab, n=k)
        return [[term for term, _ in words] for words in ranked]

    def validate(self) -> None:
        if self.topic_term.shape[0] != len(self.top_words) or self.topic_term.shape[0] != self.sizes.shape[0]:
            raise InvalidInputError("topic_term, top_words and sizes must align")
        if self.topic_term.shape[1] != len(self.vocab):
            raise InvalidInputError("topic_term width must equal vocab size")
        if int(self.sizes.sum()) + self.labels.noise_count != self.num_docs:
            raise InvalidInputError("topic sizes + noise must account for every document")


@dataclass
class TimeSlicedTopics:
    """Per-bin topic representations and frequencies under fixed global labels."""

    bin_edges: list[tuple[float, float]]
    topic_term: np.ndarray  # (num_bins, num_topics, vocab)
    frequencies: np.ndarray  # (num_bins, num_topics) document counts
    noise: np.ndarray  # (num_bins,) noise document counts
    bin_sizes: np.ndarray  # (num_bins,) total documents per bin
    vocab: list[str]

    @property
    def num_bins(self) -> int:
        return len(self.bin_edges)

    def validate(self) -> None:
        if not np.array_equal(self.frequencies.sum(axis=1) + self.noise, self.bin_sizes):
            raise InvalidInputError("per-bin topic frequencies + noise must equal bin sizes")


def ctfidf(doc_term: DocTermCounts, labels: Labeling) -> np.ndarray:
    """Class-based TF-IDF weights, one row per non-noise cluster."""
    lab = labels.labels
    if doc_term.num_docs != lab.shape[0]:
        raise InvalidInputError("doc_term rows must align with labels")
    k = labels.n_clusters
    if k == 0:
        raise ModelError("no topics found")
    member = sp.csr_matrix(
        (np.ones((lab >= 0).sum()), (lab[lab >= 0], np.nonzero(lab >= 0)[0])),
        shape=(k, lab.shape[0]),
    )
    tf = np.asarray((member @ doc_term.counts).todense(), dtype=np.float64)
    f = tf.sum(axis=0)
    total_tokens = tf.sum()
    a = total_tokens / k
    with np.errstate(divide="ignore"):
        idf = np.log1p(np.where(f > 0, a / np.where(f > 0, f, 1.0), 0.0))
    weights = tf * idf
    weights[:, f == 0] = 0.0
    return weights


def top_words(
    topic_term: np.ndarray, vocab: Sequence[str], n: int = 10
) -> tuple[list[list[tuple[str, float]]], frozenset[int]]:
    """Rank each topic's n highest-weight terms, ties broken lexicographically.

    All-zero rows are ranked too (lexicographically-first terms at score 0)
    and reported in the returned degenerate-topic set.
    """
    if n > len(vocab):
        raise ParameterError(f"n={n} exceeds vocabulary size {len(vocab)}")
    ranked: list[list[tuple[str, float]]] = []
    degenerate: set[int] = set()
    vocab = list(vocab)
    for t in range(topic_term.shape[0]):
        row = topic_term[t]
        order = sorted(range(len(vocab)), key=lambda j: (-row[j], vocab[j]))[:n]
        ranked.append([(vocab[j], float(row[j])) for j in order])
        if not row.any():
            degenerate.add(t)
    if degenerate:
        logger.warning("top_words: %d degenerate all-zero topic row(s)", len(degenerate))
    return ranked, frozenset(degenerate)


def _merge_once(labels: np.ndarray, weights: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Merge the smallest topic into its most cosine-similar peer; returns
    relabeled (non-canonical) labels."""
    k = weights.shape[0]
    smallest_candidates = np.nonzero(sizes == sizes.min())[0]
    smallest = int(smallest_candidates[-1])
    norms = np.linalg.norm(weights, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (weights @ weights[smallest]) / (safe * safe[smallest])
    sims[smallest] = -np.inf
    best = int(np.argmax(sims))  # ties -> lowest id
    out = labels.copy()
    out[out == smallest] = best
    out[out > smallest] -= 1  # keep ids dense
    return out


def reduce_topics(model: TopicModel, target: int, doc_term: DocTermCounts) -> TopicModel:
    """Iteratively merge the smallest topic into its most similar peer until
    the topic count reaches target; an initial count below target returns the
    model unchanged with the under-count flag set."""
    if target < 1:
        raise ParameterError(f"target topic count must be >= 1, got {target}")
    if model.num_topics <= target:
        return replace(model, under_count=model.num_topics < target)
    labels = model.labels.labels.copy()
    weights = model.topic_term
    while int(labels.max()) + 1 > target:
        sizes = np.bincount(labels[labels >= 0])
        labels = _merge_once(labels, weights, sizes)
        weights = ctfidf(doc_term, Labeling(labels))
    labeling = _canonical_labeling(labels, model.labels.probabilities)
    weights = ctfidf(doc_term, labeling)
    ranked, degenerate = top_words(weights, model.vocab, n=len(model.top_words[0]))
    return TopicModel(
        labels=labeling,
        topic_term=weights,
        top_words=ranked,
        sizes=labeling.sizes(),
        vocab=model.vocab,
        params=model.params,
        under_count=False,
        degenerate_topics=degenerate,
    )


def _canonical_labeling(labels: np.ndarray, probabilities: np.ndarray | None) -> Labeling:
    ids, counts = np.unique(labels[labels >= 0], return_counts=True)
    order = sorted(range(len(ids)), key=lambda i: (-counts[i], ids[i]))
    remap = {int(ids[i]): rank for rank, i in enumerate(order)}
    out = np.array([remap[int(l)] if l >= 0 else -1 for l in labels], dtype=np.int64)
    return Labeling(labels=out, probabilities=probabilities)


@dataclass(frozen=True)
class FitParams:
    reducer: ReducerParams = ReducerParams()
    cluster: ClusterParams = ClusterParams()
    nr_topics: int | None = None
    top_n: int = 10
    min_df: int = 1
    seed: int = 0

    def snapshot(self) -> dict:
        return {
            "reducer": {k: getattr(self.reducer, k) for k in (
                "n_neighbors", "n_components", "min_dist", "metric", "n_epochs", "mode",
                "learning_rate", "negative_sample_rate", "repulsion_strength")},
            "cluster": {
                "min_cluster_size": self.cluster.min_cluster_size,
                "min_samples": self.cluster.effective_min_samples,
                "metric": self.cluster.metric,
            },
            "nr_topics": self.nr_topics,
            "top_n": self.top_n,
            "min_df": self.min_df,
            "seed": self.seed,
        }


def fit(
    embeddings: np.ndarray,
    docs: Sequence[Document] | Sequence[str],
    params: FitParams = FitParams(),
) -> TopicModel:
    """Reduce -> cluster -> c-TF-IDF -> reduce to nr_topics -> rank top words."""
    X = np.asarray(getattr(embeddings, "data", embeddings), dtype=np.float32)
    if X.shape[0] != len(docs):
        raise InvalidInputError(
            f"embedding rows ({X.shape[0]}) must match document count ({len(docs)})"
        )
    reduced = reduce(X, with_seed(params.reducer, params.seed))
    labeling = cluster(reduced, params.cluster)
    doc_term = build_doc_term(docs, min_df=params.min_df)
    weights = ctfidf(doc_term, labeling)  # raises ModelError when all noise
    ranked, degenerate = top_words(weights, doc_term.vocab, n=min(params.top_n, len(doc_term.vocab)))
    model = TopicModel(
        labels=labeling,
        topic_term=weights,
        top_words=ranked,
        sizes=labeling.sizes(),
        vocab=doc_term.vocab,
        params=params.snapshot(),
        degenerate_topics=degenerate,
    )
    if params.nr_topics is not None:
        model = reduce_topics(model, params.nr_topics, doc_term)
    model.validate()
    return model


def time_bins(
    timestamps: np.ndarray, num_bins: int, calendar_years: bool = False
) -> tuple[list[tuple[float, float]], np.ndarray]:
    """Equal-width bins over the timestamp range (or one bin per calendar year).

    Returns (edges, assignment). Edges are [lo, hi) half-open except the last,
    which includes the range maximum.
    """
    ts = np.asarray(timestamps, dtype=np.float64)
    lo, hi = float(ts.min()), float(ts.max())
    if calendar_years:
        years = np.arange(int(lo), int(hi) + 1)
        edges = [(float(y), float(y + 1)) for y in years]
        assign = (ts.astype(np.int64) - int(lo)).astype(np.int64)
        return edges, assign
    if num_bins < 1:
        raise ParameterError(f"num_bins must be >= 1, got {num_bins}")
    if hi == lo:
        return [(lo, hi)], np.zeros(ts.shape[0], dtype=np.int64)
    width = (hi - lo) / num_bins
    assign = np.minimum(((ts - lo) / width).astype(np.int64), num_bins - 1)
    edges = [(lo + b * width, lo + (b + 1) * width) for b in range(num_bins)]
    return edges, assign


def topics_over_time(
    model: TopicModel,
    docs: Sequence[Document],
    num_bins: int = 9,
    calendar_years: bool = False,
    min_df: int | None = None,
) -> TimeSlicedTopics:
    """Recompute topic representations and frequencies per timestamp bin,
    keeping the global topic assignment fixed."""
    if any(d.timestamp is None for d in docs):
        raise ConfigurationError("dynamic topic modeling needs a timestamp on every document")
    if len(docs) != model.num_docs:
        raise InvalidInputError("docs must align with the fitted model")
    doc_term = build_doc_term(docs, min_df=min_df if min_df is not None else model.params.get("min_df", 1))
    if doc_term.vocab != model.vocab:
        # model was fitted on these docs, so vocabularies must agree
        raise InvalidInputError("document vocabulary does not match the fitted model")

    timestamps = np.array([d.timestamp for d in docs], dtype=np.float64)
    edges, assign = time_bins(timestamps, num_bins, calendar_years)
    b = len(edges)
    k = model.num_topics
    v = len(model.vocab)
    lab = model.labels.labels

    topic_term = np.zeros((b, k, v), dtype=np.float64)
    freq = np.zeros((b, k), dtype=np.int64)
    noise = np.zeros(b, dtype=np.int64)
    sizes = np.zeros(b, dtype=np.int64)
    for bin_idx in range(b):
        in_bin = assign == bin_idx
        sizes[bin_idx] = int(in_bin.sum())
        if not sizes[bin_idx]:
            continue
        noise[bin_idx] = int((lab[in_bin] == -1).sum())
        for t in range(k):
            freq[bin_idx, t] = int(((lab == t) & in_bin).sum())
        member_rows = np.nonzero(in_bin & (lab >= 0))[0]
        if member_rows.size == 0:
            continue
        member = sp.csr_matrix(
            (np.ones(member_rows.size), (lab[member_rows], member_rows)),
            shape=(k, lab.shape[0]),
        )
        tf = np.asarray((member @ doc_term.counts).todense(), dtype=np.float64)
        f = tf.sum(axis=0)
        present = freq[bin_idx] > 0
        a = tf.sum() / max(int(present.sum()), 1)
        with np.errstate(divide="ignore"):
            idf = np.log1p(np.where(f > 0, a / np.where(f > 0, f, 1.0), 0.0))
        w = tf * idf
        w[:, f == 0] = 0.0
        topic_term[bin_idx] = w

    sliced = TimeSlicedTopics(
        bin_edges=edges,
        topic_term=topic_term,
        frequencies=freq,
        noise=noise,
        bin_sizes=sizes,
        vocab=model.vocab,
    )
    sliced.validate()
    return sliced


def save_model(path: str | Path, model: TopicModel) -> None:
    """Line-delimited export: one metadata header line, then one record per topic."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "topic_model",
            "num_topics": model.num_topics,
            "num_docs": model.num_docs,
            "noise": model.labels.noise_count,
            "under_count": model.under_count,
            "params": model.params,
        }
        fh.write(json.dumps(header) + "\n")
        for t in range(model.num_topics):
            record = {
                "topic_id": t,
                "size": int(model.sizes[t]),
                "top_words": [[term, score] for term, score in model.top_words[t]],
            }
            fh.write(json.dumps(record) + "\n")


def load_model_records(path: str | Path) -> tuple[dict, list[dict]]:
    """Read a saved model export; returns (header, topic records)."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "topic_model":
        raise InvalidInputError(f"{path}: not a topic model export")
    return lines[0], lines[1:]


def save_time_slices(path: str | Path, sliced: TimeSlicedTopics, top_n: int = 10) -> None:
    """JSON export of per-bin frequencies and per-bin top words."""
    bins = []
    for b in range(sliced.num_bins):
        ranked, _ = top_words(sliced.topic_term[b], sliced.vocab, n=min(top_n, len(sliced.vocab)))
        bins.append(
            {
                "bin": b,
                "start": sliced.bin_edges[b][0],
                "end": sliced.bin_edges[b][1],
                "size": int(sliced.bin_sizes[b]),
                "noise": int(sliced.noise[b]),
                "frequencies": [int(x) for x in sliced.frequencies[b]],
                "top_words": [
                    [[term, score] for term, score in words] for words in ranked
                ],
            }
        )
    payload = {"kind": "time_sliced_topics", "num_topics": int(sliced.frequencies.shape[1]), "bins": bins}
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
