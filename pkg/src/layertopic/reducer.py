"""Nonlinear dimensionality reduction of embedding matrices before clustering.

The umap mode follows the standard fuzzy-graph construction: exact k-nearest
neighbors, per-point bandwidth calibration against a log2(k) target mass,
probabilistic t-conorm symmetrization, then stochastic gradient descent with
negative sampling on the cross-entropy attraction/repulsion objective. The
pca mode is an exact principal projection used as a deterministic stand-in
in tests. Everything is deterministic for a fixed seed in single-worker mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError

logger = logging.getLogger(__name__)

_SIGMA_TOLERANCE = 1e-5
_MIN_SIGMA_SCALE = 1e-3
_SIGMA_MAX_ITER = 64


@dataclass(frozen=True)
class ReducerParams:
    n_neighbors: int = 15
    n_components: int = 5
    min_dist: float = 0.0
    metric: str = "cosine"
    n_epochs: int = 200
    seed: int = 0
    mode: str = "umap"
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    repulsion_strength: float = 1.0

    def validate(self, num_docs: int, input_dim: int) -> None:
        if self.mode not in ("umap", "pca"):
            raise ParameterError(f"unknown reducer mode {self.mode!r}")
        if self.metric not in ("cosine", "euclidean"):
            raise ParameterError(f"unknown metric {self.metric!r}")
        if not 1 <= self.n_components < input_dim:
            raise ParameterError(
                f"n_components must be in [1, input_dim), got {self.n_components} for dim {input_dim}"
            )
        if self.min_dist < 0:
            raise ParameterError(f"min_dist must be >= 0, got {self.min_dist}")
        if self.mode == "umap" and num_docs > 1 and not 2 <= self.n_neighbors < num_docs:
            raise ParameterError(
                f"n_neighbors must be in [2, num_docs), got {self.n_neighbors} for {num_docs} docs"
            )


def pairwise_distances(X: np.ndarray, Y: np.ndarray, metric: str) -> np.ndarray:
    """Dense distance block between rows of X and rows of Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if metric == "euclidean":
        sq = np.maximum(
            (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T), 0.0
        )
        return np.sqrt(sq)
    if metric == "cosine":
        xn = np.linalg.norm(X, axis=1)
        yn = np.linalg.norm(Y, axis=1)
        xn = np.where(xn == 0.0, 1.0, xn)
        yn = np.where(yn == 0.0, 1.0, yn)
        sim = (X / xn[:, None]) @ (Y / yn[:, None]).T
        return np.clip(1.0 - sim, 0.0, 2.0)
    raise ParameterError(f"unknown metric {metric!r}")


def knn_graph(
    X: np.ndarray, k: int, metric: str = "euclidean", chunk: int = 1024
) -> tuple[np.ndarray, np.ndarray]:
    """Exact brute-force k nearest neighbors (self excluded).

    Returns (indices, distances), each (n, k), neighbors sorted by distance
    with ties broken toward the lower index.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ParameterError(f"k must be in [1, n), got k={k} for n={n}")
    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = pairwise_distances(X[start:stop], X, metric)
        block[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        dists[start:stop] = np.take_along_axis(block, order, axis=1)
    return indices, dists


class SmoothedNeighbors(NamedTuple):
    rho: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray  # directed membership, aligned with knn indices


def smooth_membership(knn_dists: np.ndarray) -> SmoothedNeighbors:
    """Calibrate per-point bandwidths and directed membership weights.

    rho is the distance to the nearest neighbor. sigma solves
    sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) by binary search; if the
    target is unreachable within 64 iterations (e.g. all neighbor distances
    equal rho) sigma is clamped and a warning is logged. Directed weights are
    exp(-max(0, d - rho) / sigma), so the nearest edge always gets weight 1.
    """
    n, k = knn_dists.shape
    target = np.log2(k)
    rho = knn_dists[:, 0].copy()
    sigma = np.empty(n, dtype=np.float64)
    mean_dist = float(np.mean(knn_dists)) if knn_dists.size else 0.0
    clamped = 0
    for i in range(n):
        gaps = np.maximum(knn_dists[i] - rho[i], 0.0)
        lo, hi, mid = 0.0, np.inf, 1.0
        converged = False
        for _ in range(_SIGMA_MAX_ITER):
            psum = float(np.exp(-gaps / mid).sum()) if mid > 0 else float((gaps == 0).sum())
            if abs(psum - target) < _SIGMA_TOLERANCE:
                converged = True
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        if not converged:
            clamped += 1
        floor = _MIN_SIGMA_SCALE * (np.mean(knn_dists[i]) if rho[i] > 0 else mean_dist)
        sigma[i] = max(mid, floor, np.finfo(np.float64).tiny)
    if clamped:
        logger.warning("sigma search clamped for %d point(s)", clamped)
    weights = np.exp(-np.maximum(knn_dists - rho[:, None], 0.0) / sigma[:, None])
    return SmoothedNeighbors(rho=rho, sigma=sigma, weights=weights)


def fuzzy_graph(knn_indices: np.ndarray, knn_dists: np.ndarray) -> sp.csr_matrix:
    """Symmetric fuzzy neighborhood graph, w = a + b - a*b over directed weights."""
    n, k = knn_indices.shape
    smoothed = smooth_membership(knn_dists)
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = knn_indices.ravel()
    vals = smoothed.weights.ravel()
    directed = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    transpose = directed.T.tocsr()
    sym = directed + transpose - directed.multiply(transpose)
    sym = sym.tocsr()
    sym.eliminate_zeros()
    return sym


@lru_cache(maxsize=None)
def fit_curve_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit (a, b) so 1/(1 + a d^(2b)) approximates the offset exponential decay."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


@numba.njit(cache=True, inline="always")
def _tau_rand_int(state):
    """Three-stage combined Tausworthe generator over int64-held 32-bit lanes."""
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@numba.njit(cache=True)
def _sgd_epochs(
    emb,
    head,
    tail,
    epochs_per_sample,
    a,
    b,
    gamma,
    initial_alpha,
    negative_sample_rate,
    n_epochs,
    rng_state,
):
    n = emb.shape[0]
    dim = emb.shape[1]
    n_edges = epochs_per_sample.shape[0]
    epoch_of_next_sample = epochs_per_sample.copy()
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    epoch_of_next_negative = epochs_per_negative.copy()

    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if epoch_of_next_sample[e] > epoch:
                continue
            i = head[e]
            j = tail[e]
            d2 = 0.0
            for c in range(dim):
                diff = emb[i, c] - emb[j, c]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
            else:
                coeff = 0.0
            for c in range(dim):
                g = coeff * (emb[i, c] - emb[j, c])
                if g > 4.0:
                    g = 4.0
                elif g < -4.0:
                    g = -4.0
                emb[i, c] += g * alpha
                emb[j, c] -= g * alpha
            epoch_of_next_sample[e] += epochs_per_sample[e]

            n_neg = int((epoch - epoch_of_next_negative[e]) / epochs_per_negative[e])
            for _ in range(n_neg):
                t = _tau_rand_int(rng_state) % n
                if t == i:
                    continue
                d2 = 0.0
                for c in range(dim):
                    diff = emb[i, c] - emb[t, c]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (2.0 * gamma * b) / ((0.001 + d2) * (a * d2**b + 1.0))
                else:
                    coeff = 0.0
                for c in range(dim):
                    if coeff > 0.0:
                        g = coeff * (emb[i, c] - emb[t, c])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                    else:
                        g = 4.0
                    emb[i, c] += g * alpha
            epoch_of_next_negative[e] += n_neg * epochs_per_negative[e]
    return emb


def _spectral_init(graph: sp.csr_matrix, n_components: int, rng: np.random.Generator) -> np.ndarray | None:
    """Normalized-Laplacian eigenvector init; None when the graph is disconnected."""
    n = graph.shape[0]
    n_parts, _ = connected_components(graph, directed=False)
    if n_parts > 1 or n < n_components + 2:
        return None
    deg = np.asarray(graph.sum(axis=1)).ravel()
    deg = np.where(deg == 0.0, 1.0, deg)
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = sp.identity(n, format="csr") - sp.diags(inv_sqrt) @ graph @ sp.diags(inv_sqrt)
    try:
        if n <= 2000:
            vals, vecs = np.linalg.eigh(lap.toarray())
            order = np.argsort(vals)
            basis = vecs[:, order[1 : n_components + 1]]
        else:
            from scipy.sparse.linalg import eigsh

            k = n_components + 1
            vals, vecs = eigsh(lap, k=k, which="SM", v0=np.ones(n), maxiter=n * 5)
            order = np.argsort(vals)
            basis = vecs[:, order[1 : n_components + 1]]
    except Exception:  # pragma: no cover - numerical fallback
        logger.warning("spectral init failed; falling back to random init")
        return None
    # fix eigenvector sign for determinism: largest-magnitude entry positive
    for c in range(basis.shape[1]):
        pivot = np.argmax(np.abs(basis[:, c]))
        if basis[pivot, c] < 0:
            basis[:, c] = -basis[:, c]
    scale = 10.0 / max(np.abs(basis).max(), np.finfo(np.float64).tiny)
    init = basis * scale + rng.normal(scale=1e-4, size=basis.shape)
    return np.ascontiguousarray(init, dtype=np.float64)


def optimize_layout(graph: sp.csr_matrix, params: ReducerParams) -> np.ndarray:
    """Lay out the fuzzy graph in params.n_components dimensions via SGD."""
    n = graph.shape[0]
    if n == 1:
        return np.zeros((1, params.n_components), dtype=np.float32)
    rng = np.random.default_rng(params.seed)
    init = _spectral_init(graph, params.n_components, rng)
    if init is None:
        # disconnected graph (or failed eigensolve): seeded Gaussian init
        init = rng.normal(0.0, 10.0, size=(n, params.n_components))
    emb = np.ascontiguousarray(init, dtype=np.float64)

    graph = graph.copy().tocsr()
    if graph.nnz == 0:
        return emb.astype(np.float32)
    max_w = graph.data.max()
    graph.data[graph.data < max_w / float(params.n_epochs)] = 0.0
    graph.eliminate_zeros()
    coo = graph.tocoo()
    if coo.nnz == 0:
        return emb.astype(np.float32)
    epochs_per_sample = max_w / coo.data.astype(np.float64)

    a, b = fit_curve_params(params.min_dist)
    rng_state = rng.integers(16, 2**31 - 1, size=3).astype(np.int64)
    emb = _sgd_epochs(
        emb,
        coo.row.astype(np.int64),
        coo.col.astype(np.int64),
        epochs_per_sample,
        a,
        b,
        float(params.repulsion_strength),
        float(params.learning_rate),
        int(params.negative_sample_rate),
        int(params.n_epochs),
        rng_state,
    )
    return emb.astype(np.float32)


class PCAResult(NamedTuple):
    projected: np.ndarray
    components: np.ndarray  # (n_components, input_dim)
    mean: np.ndarray


def pca_fit(X: np.ndarray, n_components: int) -> PCAResult:
    """Exact principal projection; component signs pinned so the
    largest-magnitude loading of each component is positive."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    centered = X - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:n_components]
    for c in range(comps.shape[0]):
        pivot = np.argmax(np.abs(comps[c]))
        if comps[c, pivot] < 0:
            comps[c] = -comps[c]
    return PCAResult(projected=centered @ comps.T, components=comps, mean=mean)


def reduce(X: np.ndarray, params: ReducerParams) -> np.ndarray:
    """Reduce an (n, d) matrix to (n, n_components) under the given params."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ParameterError("input must be a 2-D matrix")
    n, dim = X.shape
    params.validate(n, dim)
    if params.mode == "pca":
        return pca_fit(X, params.n_components).projected.astype(np.float32)
    if n == 1:
        return np.zeros((1, params.n_components), dtype=np.float32)
    indices, dists = knn_graph(X, params.n_neighbors, params.metric)
    graph = fuzzy_graph(indices, dists)
    return optimize_layout(graph, params)


def with_seed(params: ReducerParams, seed: int) -> ReducerParams:
    return replace(params, seed=seed)
