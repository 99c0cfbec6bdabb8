"""Shared fixtures: trained models used by the acceptance suite.

Training is deterministic (fixed seeds), so every session reproduces the
same checkpoints. The enhanced production model is trained on a mix of
whole boxes and sub-regions harvested from a k-means-driven recursive
bisection, matching the population of graphs the model sees when it is
used inside the recursive agglomerator.
"""

import sys
import warnings
from collections import deque
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meshgen import box_mesh, two_region_cube, unit_cube_mesh
from polyagg.agglomerate import adjust_partition, derive_seed, region_diameter
from polyagg.bisection import KMeansBisector
from polyagg.dualgraph import extract_dual_graph, induced_subgraph
from polyagg.features import build_features
from polyagg.train import TrainConfig, TrainSample, train


def harvest_recursion_subregions(mesh, target_frac, with_physical, min_nodes=40):
    """Sub-mesh graphs produced by a k-means recursive bisection of `mesh`."""
    km = KMeansBisector()
    graph = extract_dual_graph(mesh)
    features = build_features(mesh, with_physical)
    target = target_frac * region_diameter(mesh.vertices)
    samples = []
    queue = deque([(np.arange(mesh.n_tets), 5, 0)])
    while queue:
        idx, seed, depth = queue.popleft()
        points = mesh.vertices[np.unique(mesh.tets[idx])]
        if len(idx) == 1 or region_diameter(points) <= target:
            continue
        sub, node_to_parent, _ = induced_subgraph(graph, idx)
        if depth >= 1 and sub.n >= min_nodes:
            samples.append(TrainSample(sub, features[idx]))
        labels = km.bisect(sub, features[idx], seed=seed)
        labels = adjust_partition(labels, features[idx, :3])
        for side in (0, 1):
            part = node_to_parent[labels == side]
            queue.append((part, derive_seed(seed, part), depth + 1))
    return samples


def random_box_samples(count, rng):
    samples = []
    for _ in range(count):
        dims = rng.integers(4, 7, size=3)
        mesh = box_mesh(*map(int, dims))
        samples.append(TrainSample(extract_dual_graph(mesh), build_features(mesh)))
    return samples


@pytest.fixture(scope="session")
def desk_training_history():
    """Enhanced-config run on 20 small box meshes, 100 epochs, stock
    hyperparameters; returns (params, history)."""
    samples = random_box_samples(20, np.random.default_rng(11))
    assert all(s.graph.n <= 2000 for s in samples)
    config = TrainConfig.defaults_for("enhanced", seed=7, epochs=100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return train(samples, config, model="enhanced")


@pytest.fixture(scope="session")
def enhanced_model_params():
    """Production enhanced model: boxes plus recursion sub-regions."""
    rng = np.random.default_rng(11)
    samples = random_box_samples(12, rng)
    for n in (6, 8):
        samples += harvest_recursion_subregions(
            unit_cube_mesh(n), target_frac=0.3, with_physical=False
        )
    config = TrainConfig.defaults_for("enhanced", seed=7, epochs=300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params, _ = train(samples, config, model="enhanced")
    return params


@pytest.fixture(scope="session")
def two_region_meshes():
    return [two_region_cube(n) for n in (3, 4, 5, 6, 7)]


@pytest.fixture(scope="session")
def hetero_model_params(two_region_meshes):
    """Heterogeneous model trained on two-region cubes plus sub-regions."""
    samples = [
        TrainSample(extract_dual_graph(m), build_features(m, True))
        for m in two_region_meshes
    ]
    for mesh in (two_region_meshes[2], two_region_meshes[3]):
        samples += harvest_recursion_subregions(
            mesh, target_frac=0.25, with_physical=True
        )
    config = TrainConfig.defaults_for("hetero", seed=7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params, _ = train(samples, config, model="hetero")
    return params


@pytest.fixture(scope="session")
def cube_6000():
    return unit_cube_mesh(10)
