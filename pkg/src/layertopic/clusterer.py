"""Density-based hierarchical clustering of reduced embeddings.

Pipeline: core distances -> mutual reachability -> exact O(n^2) minimum
spanning tree -> single-linkage dendrogram -> condensed tree -> stability ->
excess-of-mass cluster selection. Output labels use -1 for noise and number
clusters 0..K-1 by decreasing size. All tie-breaks resolve toward the lower
index pair, so results are deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .reducer import pairwise_distances

__all__ = [
    "ClusterParams",
    "Labeling",
    "core_distances",
    "MutualReachability",
    "mutual_reachability",
    "SingleLinkage",
    "build_hierarchy",
    "condense_and_extract",
    "cluster",
]


@dataclass(frozen=True)
class ClusterParams:
    min_cluster_size: int = 10
    min_samples: int | None = None
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        if self.min_cluster_size < 2:
            raise ParameterError(f"min_cluster_size must be >= 2, got {self.min_cluster_size}")
        if self.min_samples is not None and self.min_samples < 1:
            raise ParameterError(f"min_samples must be >= 1, got {self.min_samples}")
        if self.metric != "euclidean":
            raise ParameterError(f"clusterer supports only euclidean, got {self.metric!r}")

    @property
    def effective_min_samples(self) -> int:
        return self.min_samples if self.min_samples is not None else self.min_cluster_size


@dataclass
class Labeling:
    """Cluster labels per document; -1 is noise, ids dense by decreasing size."""

    labels: np.ndarray
    probabilities: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0

    @property
    def noise_count(self) -> int:
        return int((self.labels == -1).sum())

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_clusters)

    def validate(self) -> None:
        if self.labels.min(initial=0) < -1:
            raise ParameterError("labels must be >= -1")
        sizes = self.sizes()
        if self.n_clusters and (sizes == 0).any():
            raise ParameterError("cluster ids must be dense")
        if self.n_clusters and np.any(np.diff(sizes) > 0):
            raise ParameterError("cluster ids must be ordered by decreasing size")


def core_distances(Y: np.ndarray, min_samples: int, chunk: int = 1024) -> np.ndarray:
    """Distance to the min_samples-th nearest neighbor (self excluded)."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if not 1 <= min_samples < n:
        raise ParameterError(f"min_samples must be in [1, n), got {min_samples} for n={n}")
    core = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = pairwise_distances(Y[start:stop], Y, "euclidean")
        block[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        part = np.partition(block, min_samples - 1, axis=1)
        core[start:stop] = part[:, min_samples - 1]
    return core


class MutualReachability:
    """Accessor for d_mr(a, b) = max(core(a), core(b), d(a, b))."""

    def __init__(self, Y: np.ndarray, core: np.ndarray):
        self.Y = np.asarray(Y, dtype=np.float64)
        self.core = np.asarray(core, dtype=np.float64)
        if self.core.shape[0] != self.Y.shape[0]:
            raise ParameterError("core distances must align with the point set")

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def row(self, i: int) -> np.ndarray:
        d = pairwise_distances(self.Y[i : i + 1], self.Y, "euclidean")[0]
        d[i] = 0.0
        return np.maximum(np.maximum(d, self.core), self.core[i])

    def pair(self, a: int, b: int) -> float:
        d = 0.0 if a == b else float(np.linalg.norm(self.Y[a] - self.Y[b]))
        return max(d, self.core[a], self.core[b])


def mutual_reachability(Y: np.ndarray, core: np.ndarray) -> MutualReachability:
    return MutualReachability(Y, core)


class SingleLinkage(NamedTuple):
    """MST edges (a, b, weight) and the dendrogram they induce.

    merges follows the scipy linkage convention: row i merges node ids
    left/right (points 0..n-1, internal nodes n..2n-2) at the given distance
    into node n+i of the recorded size.
    """

    mst_edges: np.ndarray  # (n-1, 3) float: a, b, d_mr
    merges: np.ndarray  # (n-1, 4) float: left, right, distance, size


def _prim_mst(mr: MutualReachability) -> np.ndarray:
    n = mr.n
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    source = np.full(n, -1, dtype=np.int64)
    current = 0
    in_tree[0] = True
    edges = np.empty((n - 1, 3), dtype=np.float64)
    for step in range(n - 1):
        row = mr.row(current)
        improve = (~in_tree) & (row < best)
        best[improve] = row[improve]
        source[improve] = current
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))  # ties -> lowest index
        edges[step] = (source[nxt], nxt, best[nxt])
        in_tree[nxt] = True
        current = nxt
    return edges


def build_hierarchy(mr: MutualReachability) -> SingleLinkage:
    """Exact MST over mutual reachability, then single-linkage merges."""
    n = mr.n
    if n < 2:
        raise ParameterError("hierarchy needs at least 2 points")
    edges = _prim_mst(mr)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((hi, lo, edges[:, 2]))  # weight asc, then lower index pair
    edges = np.column_stack([lo, hi, edges[:, 2]])[order]

    parent = np.arange(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    size = np.ones(2 * n - 1, dtype=np.int64)
    merges = np.empty((n - 1, 4), dtype=np.float64)
    nxt = n
    for i, (a, b, w) in enumerate(edges):
        ra, rb = find(int(a)), find(int(b))
        merges[i] = (ra, rb, w, size[ra] + size[rb])
        size[nxt] = size[ra] + size[rb]
        parent[ra] = parent[rb] = nxt
        nxt += 1
    return SingleLinkage(mst_edges=edges, merges=merges)


class CondensedTree(NamedTuple):
    parent: np.ndarray
    child: np.ndarray
    lam: np.ndarray  # 1/distance at which the child leaves/splits
    child_size: np.ndarray


def _bfs_from_hierarchy(merges: np.ndarray, start: int, n: int) -> list[int]:
    out: list[int] = []
    queue = deque([start])
    while queue:
        node = queue.popleft()
        out.append(node)
        if node >= n:
            row = merges[node - n]
            queue.append(int(row[0]))
            queue.append(int(row[1]))
    return out


def condense_tree(merges: np.ndarray, min_cluster_size: int) -> CondensedTree:
    """Prune the dendrogram: keep splits where both children reach
    min_cluster_size; smaller children fall out of their parent cluster
    point by point at the split's lambda."""
    n = merges.shape[0] + 1
    root = 2 * n - 2
    relabel = np.full(2 * n - 1, -1, dtype=np.int64)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(2 * n - 1, dtype=bool)
    parents: list[int] = []
    children: list[int] = []
    lams: list[float] = []
    sizes: list[int] = []

    def emit(parent: int, child: int, lam: float, size: int) -> None:
        parents.append(parent)
        children.append(child)
        lams.append(lam)
        sizes.append(size)

    def node_size(node: int) -> int:
        return 1 if node < n else int(merges[node - n, 3])

    def shed_points(top: int, parent: int, lam: float) -> None:
        for sub in _bfs_from_hierarchy(merges, top, n):
            if sub < n:
                emit(parent, sub, lam, 1)
            ignore[sub] = True

    for node in _bfs_from_hierarchy(merges, root, n):
        if ignore[node] or node < n:
            continue
        left, right, dist = int(merges[node - n, 0]), int(merges[node - n, 1]), merges[node - n, 2]
        lam = 1.0 / dist if dist > 0.0 else np.inf
        left_size, right_size = node_size(left), node_size(right)
        label = relabel[node]
        if left_size >= min_cluster_size and right_size >= min_cluster_size:
            relabel[left] = next_label
            emit(label, next_label, lam, left_size)
            next_label += 1
            relabel[right] = next_label
            emit(label, next_label, lam, right_size)
            next_label += 1
        elif left_size < min_cluster_size and right_size < min_cluster_size:
            shed_points(left, label, lam)
            shed_points(right, label, lam)
        elif left_size < min_cluster_size:
            relabel[right] = label
            shed_points(left, label, lam)
        else:
            relabel[left] = label
            shed_points(right, label, lam)

    return CondensedTree(
        parent=np.asarray(parents, dtype=np.int64),
        child=np.asarray(children, dtype=np.int64),
        lam=np.asarray(lams, dtype=np.float64),
        child_size=np.asarray(sizes, dtype=np.int64),
    )


def compute_stability(tree: CondensedTree, n: int) -> dict[int, float]:
    """stability(c) = sum over children of (lambda_child - lambda_birth(c)) * size."""
    births: dict[int, float] = {int(n): 0.0}
    for child, lam in zip(tree.child, tree.lam):
        if child >= n:
            births[int(child)] = float(lam)
    stability: dict[int, float] = {}
    for parent, lam, size in zip(tree.parent, tree.lam, tree.child_size):
        birth = births[int(parent)]
        lam = float(lam)
        contribution = 0.0 if lam == birth else (lam - birth) * int(size)
        stability[int(parent)] = stability.get(int(parent), 0.0) + contribution
    for cluster in births:
        stability.setdefault(cluster, 0.0)
    return stability


def _select_excess_of_mass(tree: CondensedTree, stability: dict[int, float], n: int) -> set[int]:
    cluster_children: dict[int, list[int]] = {}
    for parent, child in zip(tree.parent, tree.child):
        if child >= n:
            cluster_children.setdefault(int(parent), []).append(int(child))
    is_cluster = {c: True for c in stability if c != n}
    stability = dict(stability)
    for node in sorted(is_cluster, reverse=True):  # deepest ids first
        subtree = sum(stability[c] for c in cluster_children.get(node, []))
        if subtree > stability[node]:
            is_cluster[node] = False
            stability[node] = subtree
        else:
            queue = deque(cluster_children.get(node, []))
            while queue:
                sub = queue.popleft()
                is_cluster[sub] = False
                queue.extend(cluster_children.get(sub, []))
    return {c for c, keep in is_cluster.items() if keep}


def _labels_from_selection(
    tree: CondensedTree, selected: set[int], n: int
) -> tuple[np.ndarray, np.ndarray]:
    cluster_parent: dict[int, int] = {}
    point_parent = np.full(n, n, dtype=np.int64)
    point_lam = np.zeros(n, dtype=np.float64)
    for parent, child, lam in zip(tree.parent, tree.child, tree.lam):
        if child < n:
            point_parent[child] = parent
            point_lam[child] = lam
        else:
            cluster_parent[int(child)] = int(parent)

    def owning_cluster(node: int) -> int:
        while node != n and node not in selected:
            node = cluster_parent[node]
        return node

    raw = np.full(n, -1, dtype=np.int64)
    for p in range(n):
        owner = owning_cluster(int(point_parent[p]))
        if owner != n:
            raw[p] = owner

    # membership strength: lambda of the point relative to its cluster's death
    death: dict[int, float] = {}
    for c in selected:
        members: set[int] = {c}
        queue = deque([c])
        while queue:
            node = queue.popleft()
            for child, parent in cluster_parent.items():
                if parent == node and child not in selected:
                    members.add(child)
                    queue.append(child)
        lams = tree.lam[np.isin(tree.parent, list(members))]
        finite = lams[np.isfinite(lams)]
        death[c] = float(finite.max()) if finite.size else 0.0

    probs = np.zeros(n, dtype=np.float64)
    for p in range(n):
        if raw[p] == -1:
            continue
        d = death[int(raw[p])]
        if d <= 0.0 or not np.isfinite(point_lam[p]):
            probs[p] = 1.0
        else:
            probs[p] = min(point_lam[p], d) / d
    return raw, probs


def _canonicalize(raw: np.ndarray, probs: np.ndarray) -> Labeling:
    ids, counts = np.unique(raw[raw >= 0], return_counts=True)
    order = sorted(range(len(ids)), key=lambda i: (-counts[i], ids[i]))
    remap = {int(ids[i]): rank for rank, i in enumerate(order)}
    labels = np.array([remap[int(r)] if r >= 0 else -1 for r in raw], dtype=np.int64)
    return Labeling(labels=labels, probabilities=probs)


def condense_and_extract(linkage: SingleLinkage, min_cluster_size: int) -> Labeling:
    """Condense the dendrogram and pick the most stable non-overlapping clusters."""
    n = linkage.merges.shape[0] + 1
    tree = condense_tree(linkage.merges, min_cluster_size)
    if tree.parent.size == 0:
        return Labeling(labels=np.full(n, -1, dtype=np.int64), probabilities=np.zeros(n))
    stability = compute_stability(tree, n)
    selected = _select_excess_of_mass(tree, stability, n)
    if not selected:
        return Labeling(labels=np.full(n, -1, dtype=np.int64), probabilities=np.zeros(n))
    raw, probs = _labels_from_selection(tree, selected, n)
    labeling = _canonicalize(raw, probs)
    labeling.validate()
    return labeling


def cluster(Y: np.ndarray, params: ClusterParams = ClusterParams()) -> Labeling:
    """Full clustering pipeline on a reduced matrix."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if n < 2 or n < params.min_cluster_size:
        return Labeling(labels=np.full(n, -1, dtype=np.int64), probabilities=np.zeros(n))
    min_samples = min(params.effective_min_samples, n - 1)
    core = core_distances(Y, min_samples)
    linkage = build_hierarchy(mutual_reachability(Y, core))
    return condense_and_extract(linkage, params.min_cluster_size)
