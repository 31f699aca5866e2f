import logging

import numpy as np
import pytest

from layertopic.errors import ParameterError
from layertopic.reducer import (
    ReducerParams,
    fuzzy_graph,
    knn_graph,
    pairwise_distances,
    pca_fit,
    reduce,
    smooth_membership,
)


def brute_force_knn(X, k, metric):
    d = pairwise_distances(X, X, metric)
    np.fill_diagonal(d, np.inf)
    idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    return idx, np.take_along_axis(d, idx, axis=1)


class TestKnn:
    def test_collinear_points(self):
        X = np.array([[0.0], [1.0], [10.0]])
        idx, dist = knn_graph(X, 1, "euclidean")
        assert idx.ravel().tolist() == [1, 0, 1]
        assert dist.ravel().tolist() == [1.0, 1.0, 9.0]

    def test_complete_graph(self, rng):
        X = rng.normal(size=(7, 3))
        idx, _ = knn_graph(X, 6, "euclidean")
        for i in range(7):
            assert sorted(idx[i]) == sorted(set(range(7)) - {i})

    def test_matches_brute_force(self, rng):
        for metric in ("euclidean", "cosine"):
            X = rng.normal(size=(50, 8))
            idx, dist = knn_graph(X, 5, metric)
            bidx, bdist = brute_force_knn(X, 5, metric)
            assert np.array_equal(idx, bidx)
            np.testing.assert_array_equal(dist, bdist)

    def test_exactness_up_to_500(self, rng):
        for n in (20, 100, 500):
            X = rng.normal(size=(n, 6))
            k = int(rng.integers(2, 16))
            idx, _ = knn_graph(X, k, "euclidean")
            bidx, _ = brute_force_knn(X, k, "euclidean")
            assert np.array_equal(idx, bidx)

    def test_k_too_large(self, rng):
        with pytest.raises(ParameterError):
            knn_graph(rng.normal(size=(5, 2)), 5, "euclidean")

    def test_chunking_invariant(self, rng):
        # BLAS block shapes perturb distances at the ulp level; neighbor
        # choice must not move, distances agree to 1e-12
        X = rng.normal(size=(67, 4))
        a = knn_graph(X, 6, "euclidean", chunk=7)
        b = knn_graph(X, 6, "euclidean", chunk=1024)
        assert np.array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-12)


class TestFuzzyGraph:
    def test_nearest_edge_weight_one(self, rng):
        X = rng.normal(size=(30, 4))
        idx, dist = knn_graph(X, 5, "euclidean")
        smoothed = smooth_membership(dist)
        assert np.all(smoothed.weights[:, 0] == 1.0)

    def test_equal_distance_point_weights_equal(self, caplog):
        # 4 points at the corners of a square: each point's 2 nearest
        # neighbors sit at the same distance, so its gaps are all zero
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        idx, dist = knn_graph(X, 2, "euclidean")
        with caplog.at_level(logging.WARNING):
            smoothed = smooth_membership(dist)
        for i in range(4):
            assert len(set(smoothed.weights[i])) == 1
        assert any("clamped" in rec.message for rec in caplog.records)

    def test_constraint_mass(self, rng):
        X = rng.normal(size=(40, 5))
        k = 8
        _, dist = knn_graph(X, k, "euclidean")
        smoothed = smooth_membership(dist)
        sums = smoothed.weights.sum(axis=1)
        np.testing.assert_allclose(sums, np.log2(k), atol=1e-3)

    def test_symmetric_bounded(self, rng):
        for _ in range(5):
            X = rng.normal(size=(35, 6))
            idx, dist = knn_graph(X, 6, "euclidean")
            g = fuzzy_graph(idx, dist)
            assert (g != g.T).nnz == 0
            assert g.data.min() > 0.0
            assert g.data.max() <= 1.0


class TestLayout:
    def test_single_point_at_origin(self):
        Y = reduce(np.ones((1, 4), dtype=np.float32), ReducerParams(n_components=2))
        assert np.array_equal(Y, np.zeros((1, 2), dtype=np.float32))

    def test_blob_separation(self, blobs):
        X, labels = blobs
        Y = reduce(X, ReducerParams(seed=3))
        centroids = np.stack([Y[labels == t].mean(axis=0) for t in range(3)])
        inter = np.mean(
            [np.linalg.norm(centroids[i] - centroids[j]) for i in range(3) for j in range(i + 1, 3)]
        )
        intra = np.mean(
            [np.linalg.norm(Y[labels == t] - centroids[t], axis=1).mean() for t in range(3)]
        )
        assert inter > 3 * intra

    def test_fixed_seed_identical(self, blobs):
        X, _ = blobs
        params = ReducerParams(seed=11)
        a = reduce(X, params)
        b = reduce(X, params)
        assert np.array_equal(a, b)

    def test_seed_changes_layout(self, blobs):
        X, _ = blobs
        assert not np.array_equal(reduce(X, ReducerParams(seed=1)), reduce(X, ReducerParams(seed=2)))


class TestPca:
    def test_line_recovery(self):
        t = np.linspace(-2, 2, 40)
        direction = np.array([1.0, 2.0, -1.0])
        X = np.outer(t, direction) + np.array([5.0, 5.0, 5.0])
        result = pca_fit(X, 1)
        recon = result.projected @ result.components + result.mean
        assert np.abs(recon - X).max() < 1e-8

    def test_projection_idempotent(self, rng):
        X = rng.normal(size=(30, 8))
        result = pca_fit(X, 3)
        recon = result.projected @ result.components + result.mean
        again = pca_fit(recon, 3)
        np.testing.assert_allclose(np.abs(again.projected), np.abs(result.projected), atol=1e-8)

    def test_sign_convention_deterministic(self, rng):
        X = rng.normal(size=(25, 5))
        a = pca_fit(X, 2)
        b = pca_fit(X.copy(), 2)
        np.testing.assert_array_equal(a.projected, b.projected)
        for c in range(2):
            pivot = np.argmax(np.abs(a.components[c]))
            assert a.components[c, pivot] > 0

    def test_n_components_too_large(self, rng):
        with pytest.raises(ParameterError):
            reduce(rng.normal(size=(10, 4)), ReducerParams(mode="pca", n_components=4))

    def test_pca_mode_via_reduce(self, rng):
        X = rng.normal(size=(30, 8)).astype(np.float32)
        Y = reduce(X, ReducerParams(mode="pca", n_components=3))
        assert Y.shape == (30, 3)


class TestParams:
    def test_neighbor_bounds(self, rng):
        X = rng.normal(size=(10, 4))
        with pytest.raises(ParameterError):
            reduce(X, ReducerParams(n_neighbors=10))
        with pytest.raises(ParameterError):
            reduce(X, ReducerParams(n_neighbors=1))

    def test_unknown_mode(self, rng):
        with pytest.raises(ParameterError):
            reduce(rng.normal(size=(10, 4)), ReducerParams(mode="tsne"))
