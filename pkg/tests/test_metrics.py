"""Metric tests against a brute-force oracle that materializes every sliding
window as a set and counts containment by direct iteration."""

import math
from itertools import combinations

import numpy as np
import pytest

from layertopic.errors import InvalidInputError, MetricError
from layertopic.metrics import MetricParams, npmi_coherence, topic_diversity, window_cooccurrence_counts


def brute_force_windows(token_docs, window):
    out = []
    for tokens in token_docs:
        m = len(tokens)
        if m == 0:
            continue
        if m <= window:
            out.append(set(tokens))
        else:
            for s in range(m - window + 1):
                out.append(set(tokens[s : s + window]))
    return out


def brute_force_npmi(topics, token_docs, params: MetricParams) -> float:
    windows = brute_force_windows(token_docs, params.window)
    total = len(windows)
    vocab = set()
    for w in windows:
        vocab |= w

    def count(*words):
        return sum(1 for w in windows if all(x in w for x in words))

    topic_scores = []
    for words in topics:
        seen = []
        for w in words[: params.coherence_top_n]:
            if w in vocab and w not in seen:
                seen.append(w)
        if len(seen) < 2:
            continue
        pair_scores = []
        for wi, wj in combinations(seen, 2):
            nij = count(wi, wj)
            ni, nj = count(wi), count(wj)
            if nij == 0:
                pair_scores.append(-1.0)
                continue
            pij, pi, pj = nij / total, ni / total, nj / total
            if pij >= 1.0 or (nij == ni and nij == nj):
                pair_scores.append(1.0)
            elif nij * total == ni * nj:
                pair_scores.append(0.0)
            else:
                pair_scores.append(math.log(pij / (pi * pj)) / -math.log(pij))
        topic_scores.append(sum(pair_scores) / len(pair_scores))
    return sum(topic_scores) / len(topic_scores)


def brute_force_diversity(topics, top_k):
    union = set()
    for words in topics:
        union |= set(list(words)[:top_k])
    return len(union) / (top_k * len(topics))


def random_corpus(rng, max_docs=50, max_vocab=30):
    vocab = [f"w{i}" for i in range(int(rng.integers(4, max_vocab + 1)))]
    docs = []
    for _ in range(int(rng.integers(1, max_docs + 1))):
        length = int(rng.integers(0, 40))
        docs.append([vocab[int(i)] for i in rng.integers(0, len(vocab), size=length)])
    if all(len(d) == 0 for d in docs):
        docs.append([vocab[0], vocab[1]])
    return vocab, docs


def random_topics(rng, vocab, max_topics=6, words_per_topic=5):
    n_topics = int(rng.integers(1, max_topics + 1))
    topics = []
    for _ in range(n_topics):
        k = min(words_per_topic, len(vocab))
        topics.append(list(rng.choice(vocab, size=k, replace=False)))
    return topics


class TestWindowCounts:
    def test_known_six_doc_corpus(self):
        docs = [
            ["aa", "bb", "cc"],
            ["aa", "bb"],
            ["cc", "dd", "aa", "bb", "cc"],
            [],
            ["dd"],
            ["bb", "cc", "dd", "aa"],
        ]
        word, joint, total = window_cooccurrence_counts(docs, ["aa", "bb", "cc", "dd"], window=3)
        windows = brute_force_windows(docs, 3)
        assert total == len(windows)
        for i, w in enumerate(["aa", "bb", "cc", "dd"]):
            assert word[i] == sum(1 for win in windows if w in win)
        for i, wi in enumerate(["aa", "bb", "cc", "dd"]):
            for j, wj in enumerate(["aa", "bb", "cc", "dd"]):
                assert joint[i, j] == sum(1 for win in windows if wi in win and wj in win)

    def test_short_doc_forms_one_window(self):
        word, joint, total = window_cooccurrence_counts([["x"]], ["x"], window=10)
        assert total == 1 and word[0] == 1

    def test_empty_doc_contributes_nothing(self):
        word, joint, total = window_cooccurrence_counts([[], ["x", "y"]], ["x"], window=4)
        assert total == 1


class TestNpmiBoundaries:
    def test_perfect_cooccurrence_is_exactly_one(self):
        docs = [["x", "y"], ["x", "y"], ["z", "w"]]
        assert npmi_coherence([["x", "y"]], docs, MetricParams(window=10)) == 1.0

    def test_independence_is_exactly_zero(self):
        # windows: {x,y} {x} {y} {} -> p(x)=p(y)=1/2, p(xy)=1/4
        docs = [["x", "y"], ["x", "qq"], ["y", "qq"], ["qq", "rr"]]
        assert npmi_coherence([["x", "y"]], docs, MetricParams(window=10)) == 0.0

    def test_zero_cooccurrence_floor(self):
        docs = [["x", "qq"], ["y", "qq"]]
        assert npmi_coherence([["x", "y"]], docs, MetricParams(window=10)) == -1.0

    def test_zero_cooccurrence_epsilon_mode(self):
        docs = [["x", "qq"], ["y", "qq"]]
        score = npmi_coherence([["x", "y"]], docs, MetricParams(window=10, zero_pair_mode="epsilon"))
        assert -1.0 < score < -0.9

    def test_absent_words_skipped_with_warning(self, caplog):
        docs = [["x", "y"], ["x", "y"]]
        with caplog.at_level("WARNING"):
            score = npmi_coherence([["x", "y", "ghost"]], docs, MetricParams(window=5))
        assert score == 1.0
        assert any("absent" in rec.message for rec in caplog.records)

    def test_topic_with_one_usable_word_skipped(self, caplog):
        docs = [["x", "y"], ["x", "y"]]
        with caplog.at_level("WARNING"):
            score = npmi_coherence([["x", "y"], ["x", "ghost"]], docs, MetricParams(window=5))
        assert score == 1.0

    def test_all_topics_unusable_raises(self):
        docs = [["x", "y"]]
        with pytest.raises(MetricError):
            npmi_coherence([["ghost", "phantom"]], docs, MetricParams(window=5))

    def test_empty_reference_raises(self):
        with pytest.raises(InvalidInputError):
            npmi_coherence([["x", "y"]], [], MetricParams())

    def test_word_order_within_topic_irrelevant(self, rng):
        vocab, docs = random_corpus(rng)
        topics = random_topics(rng, vocab)
        params = MetricParams(window=7)
        base = npmi_coherence(topics, docs, params)
        shuffled = [list(rng.permutation(t)) for t in topics]
        assert npmi_coherence(shuffled, docs, params) == pytest.approx(base, abs=1e-12)


class TestDiversityBoundaries:
    def test_disjoint_is_one(self):
        topics = [[f"a{i}", f"b{i}"] for i in range(4)]
        assert topic_diversity(topics, 2) == 1.0

    def test_identical_is_one_over_t(self):
        topics = [["a", "b", "c"]] * 5
        assert topic_diversity(topics, 3) == pytest.approx(1 / 5, abs=0)

    def test_hand_union(self):
        assert topic_diversity([["a", "b"], ["b", "c"], ["c", "d"]], 2) == pytest.approx(4 / 6, abs=1e-15)

    def test_too_few_distinct_terms_names_topic(self):
        with pytest.raises(MetricError, match="topic 1"):
            topic_diversity([["a", "b", "c"], ["x", "y"]], 3)

    def test_bounds(self, rng):
        for _ in range(25):
            vocab = [f"w{i}" for i in range(20)]
            topics = [list(rng.choice(vocab, size=5, replace=False)) for _ in range(int(rng.integers(1, 6)))]
            td = topic_diversity(topics, 5)
            assert 1 / len(topics) - 1e-15 <= td <= 1.0


class TestOracleEquivalence:
    def test_npmi_matches_brute_force_on_random_corpora(self):
        rng = np.random.default_rng(777)
        for trial in range(60):
            vocab, docs = random_corpus(rng)
            topics = random_topics(rng, vocab)
            window = int(rng.integers(1, 15))
            params = MetricParams(window=window)
            try:
                got = npmi_coherence(topics, docs, params)
            except MetricError:
                continue
            expected = brute_force_npmi(topics, docs, params)
            assert got == pytest.approx(expected, abs=1e-12), f"trial {trial}"

    def test_diversity_matches_brute_force(self):
        rng = np.random.default_rng(778)
        for _ in range(60):
            vocab = [f"w{i}" for i in range(int(rng.integers(6, 30)))]
            topics = [list(rng.choice(vocab, size=4, replace=False)) for _ in range(int(rng.integers(1, 7)))]
            assert topic_diversity(topics, 4) == pytest.approx(brute_force_diversity(topics, 4), abs=1e-12)
