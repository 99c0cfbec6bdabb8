"""k-means and multilevel bisection baselines against small-instance oracles."""


import numpy as np
import pytest

from meshgen import cycle_graph, grid_graph, path_graph, random_connected_graph
from polyagg.bisection import (
    GNNBisector,
    KMeansBisector,
    MultilevelBisector,
    cut_size,
    fm_refine,
    kmeans_bisect,
    multilevel_bisect,
)
from polyagg.dualgraph import DualGraph
from polyagg.errors import (
    CheckpointError,
    ContractViolationError,
    DegenerateGeometryError,
)


# -- k-means -------------------------------------------------------------------


def test_kmeans_separates_two_blobs():
    rng = np.random.default_rng(0)
    blob_a = rng.normal(size=(10, 3)) * 0.1
    blob_b = rng.normal(size=(10, 3)) * 0.1 + 10.0
    points = np.vstack([blob_a, blob_b])
    labels = kmeans_bisect(points, seed=1)
    assert len(set(labels[:10])) == 1 and len(set(labels[10:])) == 1
    assert labels[0] != labels[10]


def test_kmeans_symmetric_pair():
    labels = kmeans_bisect(np.array([[0.0, 0, 0], [1.0, 0, 0]]), seed=0)
    assert sorted(labels.tolist()) == [0, 1]


def wcss(points, labels):
    total = 0.0
    for k in (0, 1):
        members = points[labels == k]
        if len(members):
            total += ((members - members.mean(axis=0)) ** 2).sum()
    return total


def test_kmeans_near_optimal_wcss():
    rng = np.random.default_rng(3)
    points = rng.uniform(size=(12, 3))
    labels = kmeans_bisect(points, seed=3)
    best = min(
        wcss(points, np.array([(mask >> i) & 1 for i in range(12)]))
        for mask in range(1, 2**12 - 1)
    )
    assert wcss(points, labels) <= best * 1.05


def test_kmeans_identical_points_degenerate():
    with pytest.raises(DegenerateGeometryError):
        kmeans_bisect(np.ones((5, 3)), seed=0)


def test_kmeans_deterministic():
    rng = np.random.default_rng(4)
    points = rng.uniform(size=(30, 3))
    np.testing.assert_array_equal(
        kmeans_bisect(points, seed=7), kmeans_bisect(points, seed=7)
    )


def test_kmeans_labels_are_nearest_center():
    rng = np.random.default_rng(5)
    points = rng.uniform(size=(25, 3))
    labels = kmeans_bisect(points, seed=1)
    centers = np.array([points[labels == k].mean(axis=0) for k in (0, 1)])
    d = ((points[:, None, :] - centers[None]) ** 2).sum(axis=2)
    np.testing.assert_array_equal(labels, d.argmin(axis=1))


# -- exhaustive cut oracle -------------------------------------------------------


def optimal_balanced_cut(graph, balance=0.1):
    n = graph.n
    lo = int(np.ceil((0.5 - balance) * n - 1e-9))
    hi = int(np.floor((0.5 + balance) * n + 1e-9))
    best = None
    for mask in range(1, 2 ** (n - 1)):
        labels = np.array([(mask >> i) & 1 for i in range(n)])
        size1 = labels.sum()
        if not (lo <= size1 <= hi):
            continue
        cut = cut_size(graph.edges, labels)
        best = cut if best is None else min(best, cut)
    return best


def test_multilevel_path_is_optimal():
    g = path_graph(8)
    labels = multilevel_bisect(g, seed=0)
    assert cut_size(g.edges, labels) == 1
    assert labels.sum() == 4


def test_multilevel_cycle_is_optimal():
    g = cycle_graph(12)
    labels = multilevel_bisect(g, seed=0)
    assert cut_size(g.edges, labels) == 2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_multilevel_within_factor_of_optimum(seed):
    rng = np.random.default_rng(seed)
    for g in (path_graph(12), cycle_graph(10), grid_graph(4, 3),
              random_connected_graph(12, rng, extra_edge_prob=0.25)):
        labels = multilevel_bisect(g, seed=seed)
        best = optimal_balanced_cut(g)
        assert cut_size(g.edges, labels) <= max(1.5 * best, best + 1)
        frac = labels.sum() / g.n
        assert 0.4 - 1e-9 <= frac <= 0.6 + 1e-9


def test_multilevel_grid_plane_cut():
    g = grid_graph(4, 4, 4)
    labels = multilevel_bisect(g, seed=1)
    assert cut_size(g.edges, labels) <= 1.5 * 16  # optimal plane cut is 16
    assert labels.sum() == 32


def test_multilevel_requires_connected_graph():
    g = DualGraph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(ContractViolationError):
        multilevel_bisect(g)
    with pytest.raises(ContractViolationError):
        multilevel_bisect(DualGraph.from_edges(1, []))


def test_multilevel_deterministic():
    g = grid_graph(5, 5, 2)
    np.testing.assert_array_equal(
        multilevel_bisect(g, seed=9), multilevel_bisect(g, seed=9)
    )


# -- FM refinement --------------------------------------------------------------


def test_fm_fixes_misplaced_node():
    g = path_graph(8)
    labels = np.array([1, 0, 0, 0, 1, 1, 1, 1])  # node 0 misplaced
    before = cut_size(g.edges, labels)
    refined = fm_refine(g, labels)
    assert cut_size(g.edges, refined) < before


def test_fm_keeps_optimal_split():
    g = path_graph(8)
    labels = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    refined = fm_refine(g, labels)
    assert cut_size(g.edges, refined) == 1


def test_fm_never_increases_cut():
    rng = np.random.default_rng(6)
    for _ in range(25):
        n = int(rng.integers(4, 20))
        g = random_connected_graph(n, rng, extra_edge_prob=0.3)
        labels = rng.integers(2, size=n)
        if labels.sum() in (0, n):
            labels[0] ^= 1
        refined = fm_refine(g, labels)
        assert cut_size(g.edges, refined) <= cut_size(g.edges, labels)


def test_fm_rejects_wrong_length():
    with pytest.raises(ContractViolationError):
        fm_refine(path_graph(4), np.zeros(3, dtype=int))


# -- estimator shells -----------------------------------------------------------


def test_estimators_expose_get_params():
    assert KMeansBisector(max_iter=50).get_params() == {"max_iter": 50}
    assert MultilevelBisector(balance=0.2).get_params() == {"balance": 0.2}
    params = GNNBisector().get_params()
    assert params["config"] == "enhanced" and params["params"] is None


def test_gnn_bisector_without_weights_raises():
    rng = np.random.default_rng(0)
    g = random_connected_graph(5, rng)
    with pytest.raises(CheckpointError):
        GNNBisector().bisect(g, rng.normal(size=(5, 4)), seed=0)


def test_multilevel_bisector_ignores_features():
    g = grid_graph(3, 3)
    a = MultilevelBisector().bisect(g, None, seed=2)
    b = MultilevelBisector().bisect(g, np.zeros((9, 4)), seed=2)
    np.testing.assert_array_equal(a, b)
