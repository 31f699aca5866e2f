"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every criterion pins its tolerance and its runtime budget.
"""

import functools
import math
import time

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from layertopic.clusterer import ClusterParams, Labeling, cluster
from layertopic.corpus import build_doc_term
from layertopic.embedding import (
    AggregationMode,
    EmbeddingConfig,
    HiddenStateDoc,
    PoolingStrategy,
    aggregate_layers,
    embed_corpus,
    embed_document,
    pool,
)
from layertopic.harness import DatasetSpec, GridSpec, Runner, build_report, read_records, run_grid
from layertopic.metrics import MetricParams, npmi_coherence, topic_diversity
from layertopic.reducer import ReducerParams, reduce
from layertopic.topic_model import FitParams, fit, topics_over_time

from conftest import build_theme_fixture
from test_metrics import brute_force_diversity, brute_force_npmi, random_corpus, random_topics


def criterion(name, budget_seconds):
    """Print one pass/fail line per criterion and enforce its runtime budget."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            elapsed = time.perf_counter() - started
            status = "PASS" if elapsed < budget_seconds else "FAIL (over budget)"
            print(f"\nACCEPTANCE {name}: {status} ({elapsed:.1f}s, budget {budget_seconds}s)")
            assert elapsed < budget_seconds, f"{name} exceeded runtime budget: {elapsed:.1f}s"

        return wrapper

    return decorate


@criterion("pooling-aggregation-algebra", budget_seconds=10)
def test_pooling_aggregation_algebra():
    rng = np.random.default_rng(101)
    for trial in range(1000):
        layers = int(rng.integers(5, 14))
        tokens = int(rng.integers(1, 33))
        dim = int(rng.integers(2, 17))
        doc = HiddenStateDoc(trial, rng.normal(0, 2, size=(layers, tokens, dim)).astype(np.float32))

        # mean/sum commutation within 1e-5 relative (atol guards zero crossings)
        got = embed_document(doc, EmbeddingConfig(AggregationMode.SUM_LAST_FOUR, PoolingStrategy.MEAN))
        pooled = [pool(doc.states[l], PoolingStrategy.MEAN) for l in range(layers - 4, layers)]
        expected = np.sum(np.asarray(pooled, dtype=np.float64), axis=0)
        atol = 1e-6 * max(float(np.abs(expected).max()), 1.0)
        np.testing.assert_allclose(got, expected, rtol=1e-5, atol=atol)

        got = embed_document(doc, EmbeddingConfig(AggregationMode.SUM_ALL_LAYERS, PoolingStrategy.MEAN))
        pooled = [pool(doc.states[l], PoolingStrategy.MEAN) for l in range(layers)]
        expected = np.sum(np.asarray(pooled, dtype=np.float64), axis=0)
        atol = 1e-6 * max(float(np.abs(expected).max()), 1.0)
        np.testing.assert_allclose(got, expected, rtol=1e-5, atol=atol)

        # CLS commutation exact for every aggregation
        cls_doc = HiddenStateDoc(trial, doc.states[:, :1, :])
        for mode in AggregationMode:
            via_pool = embed_document(doc, EmbeddingConfig(mode, PoolingStrategy.CLS))
            via_slice = aggregate_layers(cls_doc, mode)[0]
            assert np.array_equal(via_pool, via_slice)

        # max dominates mean elementwise
        for mode in (AggregationMode.LAST_LAYER, AggregationMode.SUM_ALL_LAYERS):
            toks = aggregate_layers(doc, mode)
            assert np.all(pool(toks, PoolingStrategy.MAX) >= pool(toks, PoolingStrategy.MEAN))

        # shape law exact
        for config in EmbeddingConfig.all_configs():
            width = embed_document(doc, config).shape[0]
            assert width == (4 * dim if config.aggregation is AggregationMode.CONCAT_LAST_FOUR else dim)


@criterion("metric-oracles", budget_seconds=30)
def test_metric_oracles():
    rng = np.random.default_rng(202)
    checked = 0
    for _ in range(200):
        vocab, docs = random_corpus(rng, max_docs=50, max_vocab=30)
        topics = random_topics(rng, vocab, max_topics=4, words_per_topic=4)
        params = MetricParams(window=int(rng.integers(1, 12)))
        try:
            got_tc = npmi_coherence(topics, docs, params)
        except Exception:
            continue
        assert got_tc == pytest.approx(brute_force_npmi(topics, docs, params), abs=1e-12)
        k = min(3, min(len(t) for t in topics))
        got_td = topic_diversity([t[:k] for t in topics], k)
        assert got_td == pytest.approx(brute_force_diversity(topics, k), abs=1e-12)
        checked += 1
    assert checked >= 150  # the vast majority of corpora must be scorable

    # boundary cases, exact
    docs = [["x", "y"], ["x", "y"], ["z", "w"]]
    assert npmi_coherence([["x", "y"]], docs, MetricParams(window=10)) == 1.0
    docs = [["x", "y"], ["x", "qq"], ["y", "qq"], ["qq", "rr"]]
    assert npmi_coherence([["x", "y"]], docs, MetricParams(window=10)) == 0.0
    assert topic_diversity([["a", "b"], ["c", "d"], ["e", "f"]], 2) == 1.0
    assert topic_diversity([["a", "b"]] * 4, 2) == 1 / 4


@criterion("ctfidf-hand-oracle", budget_seconds=10)
def test_ctfidf_hand_oracle():
    import scipy.sparse as sp

    from layertopic.corpus import DocTermCounts
    from layertopic.topic_model import ctfidf, top_words
    from test_topic_model import brute_force_ctfidf

    # 2-class closed form: W = 2 * log 3
    dt = build_doc_term(["tt tt aa bb", "cc cc dd ee"])
    W = ctfidf(dt, Labeling(np.array([0, 1])))
    assert W[0, dt.vocab.index("tt")] == pytest.approx(2 * math.log(3), abs=1e-12)

    rng = np.random.default_rng(303)
    words = [f"w{i}" for i in range(18)]
    for _ in range(20):
        texts = [" ".join(rng.choice(words, size=int(rng.integers(3, 30)))) for _ in range(12)]
        labels = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, -1])
        dt = build_doc_term(texts)
        np.testing.assert_allclose(
            ctfidf(dt, Labeling(labels)), brute_force_ctfidf(dt, labels), atol=1e-12
        )

    # count scaling leaves rankings unchanged on 100 random instances
    for _ in range(100):
        texts = [" ".join(rng.choice(words, size=int(rng.integers(4, 20)))) for _ in range(8)]
        labels = Labeling(np.array([0, 0, 1, 1, 2, 2, 2, -1]))
        dt = build_doc_term(texts)
        k = int(rng.integers(2, 10))
        scaled = DocTermCounts(dt.vocab, sp.csr_matrix(dt.counts * k))
        r1, _ = top_words(ctfidf(dt, labels), dt.vocab, n=min(8, len(dt.vocab)))
        rk, _ = top_words(ctfidf(scaled, labels), dt.vocab, n=min(8, len(dt.vocab)))
        assert [[t for t, _ in row] for row in r1] == [[t for t, _ in row] for row in rk]


@criterion("clustering-fixture", budget_seconds=60)
def test_clustering_fixture():
    gen = np.random.default_rng(42)
    centers = np.zeros((3, 10))
    centers[0, 0] = 10.0
    centers[1, 4] = 10.0
    centers[2, 8] = 10.0
    X = np.vstack([gen.normal(c, 0.5, size=(100, 10)) for c in centers]).astype(np.float32)
    truth = np.repeat(np.arange(3), 100)

    for mode in ("umap", "pca"):
        Y = reduce(X, ReducerParams(mode=mode, seed=0))
        labeling = cluster(Y, ClusterParams())
        ari = adjusted_rand_score(truth, labeling.labels)
        assert ari >= 0.9, f"{mode} route ARI {ari:.3f}"


@criterion("end-to-end-fixture", budget_seconds=120)
def test_end_to_end_fixture(theme_dump, theme_corpus_csv):
    from layertopic.formats import DumpReader

    fixture = build_theme_fixture()
    reader = DumpReader(theme_dump)
    docs = fixture.docs

    # all 18 configurations run to completion
    for config in EmbeddingConfig.all_configs():
        matrix = embed_corpus(reader, config)
        model = fit(matrix, docs, FitParams(nr_topics=3, seed=11))
        assert model.num_topics >= 1

    # the default configuration recovers the three themes
    matrix = embed_corpus(reader, EmbeddingConfig())
    model = fit(matrix, docs, FitParams(nr_topics=3, seed=11))
    assert model.num_topics == 3 and model.under_count is False
    theme_sets = {t: set(ws) for t, ws in fixture.theme_words.items()}
    claimed = set()
    for words in model.top_terms(10):
        owners = [t for t in theme_sets if set(words) <= theme_sets[t]]
        assert owners, f"top words not inside any theme vocabulary: {words}"
        claimed.add(owners[0])
    assert claimed == {0, 1, 2}

    # fixed seed reproduces metrics bit-identically across two runs
    dataset = DatasetSpec(
        dataset_id="themes",
        corpus_path=theme_corpus_csv,
        text_column="text",
        time_column="year",
        dumps={"with": theme_dump},
    )
    spec = GridSpec(
        dataset=dataset,
        configs=(EmbeddingConfig(),),
        nr_topics_list=(3,),
        runs_per_cell=1,
        base_seed=17,
    )
    a = Runner(spec).run_single(EmbeddingConfig(), 3, 0)
    b = Runner(spec).run_single(EmbeddingConfig(), 3, 0)
    assert a.error is None and b.error is None
    assert (a.tc, a.td) == (b.tc, b.td)


@criterion("grid-bookkeeping", budget_seconds=300)
def test_grid_bookkeeping(theme_dump, theme_corpus_csv, tmp_path):
    dataset = DatasetSpec(
        dataset_id="themes",
        corpus_path=theme_corpus_csv,
        text_column="text",
        time_column="year",
        dumps={"with": theme_dump},
    )
    spec = GridSpec(
        dataset=dataset,
        base_seed=5,
        reducer=ReducerParams(mode="pca", n_components=5),
    )
    assert len(spec.configs) == 18 and spec.nr_topics_list == (10, 20, 30, 40, 50) and spec.runs_per_cell == 3
    records_path = tmp_path / "grid.jsonl"
    result = run_grid(spec, records_path)
    records = read_records(records_path)
    assert len(records) == 270  # 18 configs x 5 topic counts x 3 runs
    assert result.new_records == 270

    # report means equal brute-force recomputation to 1e-12
    cells = build_report(records)
    assert len(cells) == 18
    for cell in cells:
        mine = [
            r for r in records if (r.aggregation, r.pooling) == (cell.aggregation, cell.pooling)
        ]
        scored = [r for r in mine if r.error is None]
        assert len(mine) == 15
        assert cell.runs == len(scored)
        if scored:
            assert cell.mean_tc == pytest.approx(sum(r.tc for r in scored) / len(scored), abs=1e-12)
            assert cell.mean_td == pytest.approx(sum(r.td for r in scored) / len(scored), abs=1e-12)

    # metric curves over the default grid: 5 x-points per series (10..50)
    from layertopic.harness import emit_plot_data

    payload = emit_plot_data("metric_curves", records, tmp_path / "curves.json")
    assert len(payload["series"]) == 18
    for entry in payload["series"]:
        assert [p[0] for p in entry["tc"]] == [10, 20, 30, 40, 50]

    # forced interruption: keep the first 100 lines, resume fills exactly 170
    lines = records_path.read_text().strip().splitlines()
    records_path.write_text("\n".join(lines[:100]) + "\n")
    resumed = run_grid(spec, records_path)
    assert resumed.new_records == 170
    final = read_records(records_path)
    assert len(final) == 270
    keys = [r.cell_key() for r in final]
    assert len(keys) == len(set(keys)), "resume produced duplicate records"


@criterion("dtm-conservation", budget_seconds=120)
def test_dtm_conservation(theme_dump, theme_corpus_csv, tmp_path):
    dataset = DatasetSpec(
        dataset_id="themes",
        corpus_path=theme_corpus_csv,
        text_column="text",
        time_column="year",
        dumps={"with": theme_dump},
    )
    spec = GridSpec(
        dataset=dataset,
        configs=(EmbeddingConfig(),),
        nr_topics_list=(3,),
        runs_per_cell=3,
        base_seed=23,
        mode="dtm",
        dtm_bins=9,
    )
    records_path = tmp_path / "dtm.jsonl"
    run_grid(spec, records_path)
    records = read_records(records_path)
    assert len(records) == 27
    for rec in records:
        assert rec.bin_topic_freq_sum + rec.bin_noise == rec.bin_size
        assert rec.conservation_ok is True
        if rec.tc is not None:
            assert -1.0 <= rec.tc <= 1.0
        if rec.td is not None:
            assert 0.0 < rec.td <= 1.0

    # structural cross-check straight from the model
    fixture = build_theme_fixture()
    matrix = embed_corpus(fixture.states, EmbeddingConfig())
    model = fit(matrix, fixture.docs, FitParams(nr_topics=3, seed=1))
    sliced = topics_over_time(model, fixture.docs, num_bins=9)
    assert np.array_equal(sliced.frequencies.sum(axis=1) + sliced.noise, sliced.bin_sizes)
    assert int(sliced.bin_sizes.sum()) == len(fixture.docs)
