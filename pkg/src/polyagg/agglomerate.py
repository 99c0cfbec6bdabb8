"""Recursive-bisection mesh agglomeration with connectivity repair.

The driver repeatedly bisects sub-meshes (via an explicit work queue)
until their diameter drops below the target size, then repairs any coarse
element whose induced dual subgraph is disconnected.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dualgraph import connected_components, extract_dual_graph, induced_subgraph
from .errors import ConfigurationError, ContractViolationError, ValidationError
from .features import build_features
from .mesh import Agglomeration

__all__ = [
    "AgglomerationConfig",
    "agglomerate",
    "adjust_partition",
    "enforce_connectivity",
    "region_diameter",
    "derive_seed",
]

_MAX_DEPTH = 64
_HULL_THRESHOLD = 256


@dataclass(frozen=True)
class AgglomerationConfig:
    """Target element size: exactly one of target_abs / target_frac."""

    target_abs: float | None = None
    target_frac: float | None = None
    min_element_size: int = 2

    def __post_init__(self):
        if (self.target_abs is None) == (self.target_frac is None):
            raise ConfigurationError("set exactly one of target_abs / target_frac")
        if self.target_abs is not None and self.target_abs <= 0:
            raise ConfigurationError("target_abs must be positive")
        if self.target_frac is not None and not (0 < self.target_frac <= 1):
            raise ConfigurationError("target_frac must be in (0, 1]")
        if self.min_element_size < 1:
            raise ConfigurationError("min_element_size must be >= 1")

    def resolve(self, domain_diameter):
        if self.target_abs is not None:
            return self.target_abs
        return self.target_frac * domain_diameter


def region_diameter(points):
    """Maximum pairwise distance of a point cloud (exact).

    For large clouds the scan runs over convex-hull vertices only.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise ContractViolationError("diameter of an empty point set")
    if len(points) == 1:
        return 0.0
    if len(points) >= _HULL_THRESHOLD:
        try:
            from scipy.spatial import ConvexHull

            points = points[ConvexHull(points).vertices]
        except Exception:
            pass  # degenerate (flat) cloud: fall through to the full scan
    best = 0.0
    # block the O(n^2) scan to keep memory bounded
    for start in range(0, len(points), 512):
        block = points[start : start + 512]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def derive_seed(seed, tet_indices):
    """Child seed from the parent seed and the subset's index fingerprint."""
    h = hashlib.blake2b(digest_size=8)
    h.update((int(seed) & (2**64 - 1)).to_bytes(8, "little"))
    h.update(np.asarray(sorted(tet_indices), dtype=np.int64).tobytes())
    return int.from_bytes(h.digest(), "little")


def adjust_partition(labels, centroids):
    """Repair an empty-sided bisection by a median principal-coordinate split."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n <= 1:
        return np.zeros(n, dtype=np.int64)
    if (labels == 0).any() and (labels == 1).any():
        return labels
    centroids = np.asarray(centroids, dtype=np.float64)
    centered = centroids - centroids.mean(axis=0)
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    axis = eigvecs[:, np.argmax(eigvals)]
    coordinate = centered @ axis
    order = np.argsort(coordinate, kind="stable")
    out = np.ones(n, dtype=np.int64)
    out[order[: n // 2]] = 0
    return out


def agglomerate(mesh, model, cfg, seed=0):
    """Recursive bisection of a mesh into elements of diameter <= target.

    Implements the general strategy: extract graph and features, bisect,
    adjust, split, recurse (iteratively, via a work queue), merge, then run
    the connectivity repair once over the final elements.
    """
    graph = extract_dual_graph(mesh)
    features = build_features(mesh, with_physical=getattr(model, "needs_physical", False))
    centroids = features[:, :3]
    vertices_of_tet = mesh.tets
    target = cfg.resolve(region_diameter(mesh.vertices[np.unique(mesh.tets)]))

    assignment = np.full(mesh.n_tets, -1, dtype=np.int64)
    next_element = 0
    queue = deque([(np.arange(mesh.n_tets), seed, 0)])
    while queue:
        tet_indices, node_seed, depth = queue.popleft()
        if depth > _MAX_DEPTH:
            raise ValidationError("bisection recursion exceeded depth 64")
        points = mesh.vertices[np.unique(vertices_of_tet[tet_indices])]
        if len(tet_indices) == 1 or region_diameter(points) <= target:
            assignment[tet_indices] = next_element
            next_element += 1
            continue
        subgraph, node_to_parent, _ = induced_subgraph(graph, tet_indices)
        try:
            labels = model.bisect(subgraph, features[tet_indices], seed=node_seed)
        except ContractViolationError:
            # model requires a connected graph: recurse per component instead
            component_labels = connected_components(subgraph)
            for c in range(component_labels.max() + 1):
                part = node_to_parent[component_labels == c]
                queue.append((part, derive_seed(node_seed, part), depth))
            continue
        labels = adjust_partition(labels, centroids[tet_indices])
        for side in (0, 1):
            part = node_to_parent[labels == side]
            queue.append((part, derive_seed(node_seed, part), depth + 1))

    agg = Agglomeration.from_assignment(mesh, assignment)
    return enforce_connectivity(agg, graph=graph, min_element_size=cfg.min_element_size)


def enforce_connectivity(agg, graph=None, min_element_size=2):
    """Split or merge disconnected coarse elements until all are connected.

    The largest component keeps the element; every other component becomes
    its own element when large enough, otherwise it is merged into the
    neighboring element sharing the most dual-graph edges (ties toward the
    lowest element id).
    """
    if graph is None:
        graph = extract_dual_graph(agg.source)
    assignment = agg.assignment.copy()
    next_element = int(assignment.max()) + 1
    changed = True
    while changed:
        changed = False
        for element in np.unique(assignment):
            members = np.flatnonzero(assignment == element)
            subgraph, node_to_parent, _ = induced_subgraph(graph, members)
            component_labels = connected_components(subgraph)
            n_components = int(component_labels.max()) + 1
            if n_components == 1:
                continue
            changed = True
            components = [
                node_to_parent[component_labels == c] for c in range(n_components)
            ]
            # the largest component keeps the element id (ties toward the
            # lowest tet index); the others become new elements or merge away
            components.sort(key=lambda comp: (-len(comp), int(comp[0])))
            for c, component in enumerate(components):
                big_enough = len(component) >= min_element_size
                if c == 0 and big_enough:
                    continue
                if c > 0 and big_enough:
                    assignment[component] = next_element
                    next_element += 1
                    continue
                # undersized: merge into the neighboring element sharing the
                # most dual edges (ties toward the lowest element id)
                member = set(int(t) for t in component)
                shared = {}
                for tet in component:
                    for nb in graph.neighbors[tet]:
                        other = int(assignment[nb])
                        if other != element and int(nb) not in member:
                            shared[other] = shared.get(other, 0) + 1
                if shared:
                    best = max(shared.items(), key=lambda kv: (kv[1], -kv[0]))[0]
                    assignment[component] = best
                elif c > 0:  # isolated piece of the mesh: must stand alone
                    assignment[component] = next_element
                    next_element += 1
    return Agglomeration.from_assignment(agg.source, assignment)
