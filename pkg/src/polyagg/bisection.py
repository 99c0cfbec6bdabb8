"""Bisection models: GNN inference, k-means on centroids, and a multilevel
(coarsen / grow / refine) graph bisector with Fiduccia-Mattheyses moves.

Models follow a light scikit-learn estimator convention (constructor
parameters, ``get_params``); the shared capability is
``bisect(graph, features, seed) -> labels in {0, 1}``, deterministic for a
fixed seed.
"""

from __future__ import annotations

import heapq

import numpy as np
from sklearn.base import BaseEstimator

from .dualgraph import connected_components
from .errors import (
    CheckpointError,
    ContractViolationError,
    DegenerateGeometryError,
)
from .features import normalize_features
from .gnn import load_checkpoint, model_forward

__all__ = [
    "BisectionModel",
    "GNNBisector",
    "KMeansBisector",
    "MultilevelBisector",
    "kmeans_bisect",
    "multilevel_bisect",
    "fm_refine",
    "cut_size",
]


class BisectionModel(BaseEstimator):
    """Interface: split a graph's nodes into two classes."""

    #: whether bisect() needs a 5th (rho) feature column
    needs_physical = False

    def bisect(self, graph, features, seed):
        raise NotImplementedError


class GNNBisector(BisectionModel):
    """Trained SAGE network; labels are the argmax of the class probabilities."""

    def __init__(self, params=None, config="enhanced"):
        self.params = params
        self.config = params.config if params is not None else config

    @classmethod
    def from_checkpoint(cls, path, expect_config=None):
        return cls(params=load_checkpoint(path, expect_config))

    @property
    def needs_physical(self):
        return self.config == "hetero"

    def fit(self, dataset, train_config, val_dataset=None):
        """Train on a list of TrainSample; stores params, returns self."""
        from .train import train

        self.params, self.history_ = train(
            dataset, train_config, model=self.config,
            params=self.params, val_dataset=val_dataset,
        )
        return self

    def bisect(self, graph, features, seed=0):
        if self.params is None:
            raise CheckpointError("GNN bisector has no trained parameters")
        mode = "base" if self.config == "base" else "enhanced"
        Xn = normalize_features(features, graph, mode)
        Y = model_forward(graph, Xn, self.params)
        # near-ties broken toward class 0
        labels = (Y[:, 1] - Y[:, 0] > 1e-12).astype(np.int64)
        return labels


class KMeansBisector(BisectionModel):
    """Lloyd's algorithm (k=2) on raw centroid coordinates only."""

    def __init__(self, max_iter=100):
        self.max_iter = max_iter

    def bisect(self, graph, features, seed=0):
        return kmeans_bisect(np.asarray(features)[:, :3], seed, self.max_iter)


class MultilevelBisector(BisectionModel):
    """METIS-style coarsen / initial-bisect / FM-refine partitioner."""

    def __init__(self, balance=0.1):
        self.balance = balance

    def bisect(self, graph, features=None, seed=0):
        return multilevel_bisect(graph, self.balance, seed)


# -- k-means ------------------------------------------------------------------


def kmeans_bisect(points, seed, max_iter=100):
    """Two-cluster Lloyd's algorithm with k-means++ initialization."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < 2:
        raise ContractViolationError("k-means bisection needs at least 2 points")
    if np.allclose(points, points[0]):
        raise DegenerateGeometryError("all points are identical")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, rng)
    labels = None
    for _ in range(max_iter):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        for k in range(2):
            members = new_labels == k
            if not members.any():
                # re-seed empty cluster to the point farthest from its center
                farthest = dist[np.arange(n), new_labels].argmax()
                new_labels[farthest] = k
                members = new_labels == k
            centers[k] = points[members].mean(axis=0)
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    return labels.astype(np.int64)


def _kmeanspp_init(points, rng):
    first = rng.integers(len(points))
    d2 = ((points - points[first]) ** 2).sum(axis=1)
    total = d2.sum()
    if total == 0:
        raise DegenerateGeometryError("all points are identical")
    second = rng.choice(len(points), p=d2 / total)
    return np.vstack([points[first], points[second]])


# -- multilevel bisection -----------------------------------------------------


def cut_size(edges, labels, weights=None):
    """Total weight of edges crossing the bipartition."""
    if len(edges) == 0:
        return 0
    crossing = labels[edges[:, 0]] != labels[edges[:, 1]]
    if weights is None:
        return int(crossing.sum())
    return float(weights[crossing].sum())


class _Level:
    """One coarsening level: weighted edges plus node weights."""

    __slots__ = ("n", "edges", "edge_weights", "node_weights", "coarse_of")

    def __init__(self, n, edges, edge_weights, node_weights, coarse_of=None):
        self.n = n
        self.edges = edges
        self.edge_weights = edge_weights
        self.node_weights = node_weights
        self.coarse_of = coarse_of  # fine node -> coarse node of next level


def _adjacency(level):
    adj = [[] for _ in range(level.n)]
    for (i, j), w in zip(level.edges, level.edge_weights):
        adj[i].append((j, w))
        adj[j].append((i, w))
    return adj


def _match_and_contract(level, rng):
    """Contract a random maximal matching (heavy-edge preference)."""
    order = rng.permutation(level.n)
    adj = _adjacency(level)
    mate = np.full(level.n, -1, dtype=np.int64)
    for node in order:
        if mate[node] >= 0:
            continue
        best, best_weight = -1, -1.0
        for nb, w in adj[node]:
            if mate[nb] < 0 and w > best_weight:
                best, best_weight = nb, w
        if best >= 0:
            mate[node] = best
            mate[best] = node
    coarse_of = np.full(level.n, -1, dtype=np.int64)
    next_id = 0
    for node in range(level.n):
        if coarse_of[node] >= 0:
            continue
        coarse_of[node] = next_id
        if mate[node] >= 0:
            coarse_of[mate[node]] = next_id
        next_id += 1
    node_weights = np.zeros(next_id)
    np.add.at(node_weights, coarse_of, level.node_weights)
    merged = {}
    for (i, j), w in zip(level.edges, level.edge_weights):
        ci, cj = coarse_of[i], coarse_of[j]
        if ci == cj:
            continue
        key = (min(ci, cj), max(ci, cj))
        merged[key] = merged.get(key, 0.0) + w
    if merged:
        edges = np.asarray(sorted(merged), dtype=np.int64)
        edge_weights = np.asarray([merged[tuple(e)] for e in edges])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
        edge_weights = np.empty(0)
    level.coarse_of = coarse_of
    return _Level(next_id, edges, edge_weights, node_weights)


def _greedy_growing(level, rng):
    """Grow one side by BFS from a peripheral node until half the weight."""
    adj = _adjacency(level)
    start = int(rng.integers(level.n))
    # two BFS sweeps give an (approximately) peripheral start node
    for _ in range(2):
        dist = np.full(level.n, -1, dtype=np.int64)
        dist[start] = 0
        queue = [start]
        head = 0
        while head < len(queue):
            node = queue[head]
            head += 1
            for nb, _ in adj[node]:
                if dist[nb] < 0:
                    dist[nb] = dist[node] + 1
                    queue.append(nb)
        start = int(queue[-1])
    labels = np.ones(level.n, dtype=np.int64)
    target = level.node_weights.sum() / 2.0
    absorbed = 0.0
    labels[start] = 0
    absorbed += level.node_weights[start]
    frontier = [start]
    head = 0
    while absorbed < target and head < len(frontier):
        node = frontier[head]
        head += 1
        for nb, _ in adj[node]:
            if labels[nb] == 1 and absorbed + level.node_weights[nb] <= target + 1e-9:
                labels[nb] = 0
                absorbed += level.node_weights[nb]
                frontier.append(nb)
        if head == len(frontier) and absorbed < target:
            remaining = np.flatnonzero(labels == 1)
            if len(remaining) <= 1:
                break
            labels[remaining[0]] = 0
            absorbed += level.node_weights[remaining[0]]
            frontier.append(int(remaining[0]))
    if (labels == 0).all() or (labels == 1).all():
        labels[: level.n // 2] = 0
        labels[level.n // 2 :] = 1
    return labels


def _fm_passes(level, labels, balance, max_passes=10, allow_rebalance=False):
    """FM refinement with best-prefix rollback; never increases the cut."""
    adj = _adjacency(level)
    total_weight = level.node_weights.sum()
    lo = (0.5 - balance) * total_weight
    hi = (0.5 + balance) * total_weight
    labels = labels.copy()

    def side_weight(lbl):
        return level.node_weights[labels == lbl].sum()

    if allow_rebalance:
        _force_balance(level, labels, adj, lo, hi)

    start_cut = cut_size(level.edges, labels, level.edge_weights)
    for _ in range(max_passes):
        gains = np.zeros(level.n)
        for node in range(level.n):
            for nb, w in adj[node]:
                gains[node] += w if labels[nb] != labels[node] else -w
        locked = np.zeros(level.n, dtype=bool)
        weight0 = side_weight(0)
        moves = []
        cut = cut_size(level.edges, labels, level.edge_weights)
        best_cut, best_prefix = cut, 0
        heap = [(-gains[node], node) for node in range(level.n)]
        heapq.heapify(heap)
        held = []
        while heap:
            neg_gain, node = heapq.heappop(heap)
            if locked[node] or -neg_gain != gains[node]:
                continue  # stale entry
            w = level.node_weights[node]
            new_weight0 = weight0 - w if labels[node] == 0 else weight0 + w
            if not (lo - 1e-9 <= new_weight0 <= hi + 1e-9):
                held.append(node)
                continue
            weight0 = new_weight0
            labels[node] ^= 1
            locked[node] = True
            cut -= gains[node]
            moves.append(node)
            for nb, wgt in adj[node]:
                if locked[nb]:
                    continue
                # edge became internal -> nb's move gain drops, and vice versa
                gains[nb] += -2 * wgt if labels[nb] == labels[node] else 2 * wgt
                heapq.heappush(heap, (-gains[nb], nb))
            if cut < best_cut - 1e-12:
                best_cut, best_prefix = cut, len(moves)
            for h in held:
                if not locked[h]:
                    heapq.heappush(heap, (-gains[h], h))
            held = []
        for node in moves[best_prefix:]:
            labels[node] ^= 1
        if best_prefix == 0:
            break
    final_cut = cut_size(level.edges, labels, level.edge_weights)
    assert final_cut <= start_cut + 1e-9 or allow_rebalance, "FM increased the cut"
    return labels


def _force_balance(level, labels, adj, lo, hi):
    """Move best-gain nodes from the heavy side until within balance."""
    weight0 = level.node_weights[labels == 0].sum()
    gains = np.zeros(level.n)
    for node in range(level.n):
        for nb, w in adj[node]:
            gains[node] += w if labels[nb] != labels[node] else -w
    heaps = {0: [], 1: []}
    for node in range(level.n):
        heapq.heappush(heaps[int(labels[node])], (-gains[node], node))
    guard = 0
    while (weight0 < lo - 1e-9 or weight0 > hi + 1e-9) and guard <= 2 * level.n:
        guard += 1
        heavy = 0 if weight0 > hi else 1
        node = -1
        while heaps[heavy]:
            neg_gain, cand = heapq.heappop(heaps[heavy])
            if labels[cand] == heavy and -neg_gain == gains[cand]:
                node = cand
                break
        if node < 0:
            break
        labels[node] ^= 1
        weight0 += level.node_weights[node] * (1 if heavy == 1 else -1)
        gains[node] = -gains[node]
        heapq.heappush(heaps[int(labels[node])], (-gains[node], node))
        for nb, w in adj[node]:
            gains[nb] += -2 * w if labels[nb] == labels[node] else 2 * w
            heapq.heappush(heaps[int(labels[nb])], (-gains[nb], nb))


def fm_refine(graph, labels, balance=0.1):
    """Refine a bipartition of an unweighted graph; cut never increases."""
    labels = np.asarray(labels, dtype=np.int64).copy()
    if len(labels) != graph.n:
        raise ContractViolationError("labels length must equal node count")
    level = _Level(
        graph.n,
        graph.edges,
        np.ones(len(graph.edges)),
        np.ones(graph.n),
    )
    return _fm_passes(level, labels, balance)


def multilevel_bisect(graph, balance=0.1, seed=0, coarse_limit=30):
    """Multilevel bisection of a connected graph (n >= 2)."""
    if graph.n < 2:
        raise ContractViolationError("multilevel bisection needs at least 2 nodes")
    if connected_components(graph).max() != 0:
        raise ContractViolationError(
            "multilevel bisection requires a connected graph; split by components first"
        )
    rng = np.random.default_rng(seed)
    levels = [
        _Level(graph.n, graph.edges, np.ones(len(graph.edges)), np.ones(graph.n))
    ]
    while levels[-1].n > coarse_limit:
        coarser = _match_and_contract(levels[-1], rng)
        if coarser.n == levels[-1].n:  # no edge left to contract
            break
        levels.append(coarser)
    labels = _greedy_growing(levels[-1], rng)
    labels = _fm_passes(levels[-1], labels, balance, allow_rebalance=True)
    for level in reversed(levels[:-1]):
        labels = labels[level.coarse_of]
        labels = _fm_passes(level, labels, balance, allow_rebalance=True)
    if (labels == labels[0]).all():
        labels = labels.copy()
        labels[: graph.n // 2] = 0
        labels[graph.n // 2 :] = 1
    return labels.astype(np.int64)
