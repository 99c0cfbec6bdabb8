"""Element-adjacency (dual) graph of a tetrahedral mesh and graph utilities.

Two tets are adjacent iff they share a triangular face (three common
vertices). All graphs are undirected, unweighted, without self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, NonManifoldError

__all__ = [
    "DualGraph",
    "extract_dual_graph",
    "connected_components",
    "induced_subgraph",
    "edges_to_csv",
]


@dataclass(frozen=True)
class DualGraph:
    n: int
    neighbors: tuple            # per-node sorted int64 array of adjacent nodes
    degrees: np.ndarray         # (n,) int64
    edges: np.ndarray           # (m, 2) int64 with i < j

    @classmethod
    def from_edges(cls, n, edges):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            edges = np.sort(edges, axis=1)
            edges = np.unique(edges, axis=0)
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ContractViolationError("self-loops are not allowed")
            if edges.min() < 0 or edges.max() >= n:
                raise ContractViolationError("edge endpoint out of range")
        adjacency = [[] for _ in range(n)]
        for i, j in edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        neighbors = tuple(np.asarray(sorted(a), dtype=np.int64) for a in adjacency)
        degrees = np.asarray([len(a) for a in neighbors], dtype=np.int64)
        return cls(n=n, neighbors=neighbors, degrees=degrees, edges=edges)

    @property
    def n_edges(self):
        return len(self.edges)


def extract_dual_graph(mesh):
    """Build the face-adjacency graph of a tet mesh (node i = tet i)."""
    faces = {}
    for t, tet in enumerate(mesh.tets):
        a, b, c, d = sorted(int(v) for v in tet)
        for face in ((a, b, c), (a, b, d), (a, c, d), (b, c, d)):
            owners = faces.setdefault(face, [])
            owners.append(t)
            if len(owners) > 2:
                raise NonManifoldError(
                    f"face {face} is shared by more than two tets"
                )
    edges = [owners for owners in faces.values() if len(owners) == 2]
    return DualGraph.from_edges(mesh.n_tets, edges)


def connected_components(graph, subset=None):
    """Label connected components of the subgraph induced by `subset`.

    Returns labels 0..C-1 aligned with the order of `subset` (or with all
    nodes when subset is None). Traversal is iterative.
    """
    if subset is None:
        subset = np.arange(graph.n)
    else:
        subset = np.asarray(sorted(set(int(i) for i in np.asarray(subset).ravel())))
    in_subset = np.full(graph.n, -1, dtype=np.int64)
    in_subset[subset] = np.arange(len(subset))
    labels = np.full(len(subset), -1, dtype=np.int64)
    current = 0
    for start_pos, start in enumerate(subset):
        if labels[start_pos] >= 0:
            continue
        stack = [int(start)]
        labels[start_pos] = current
        while stack:
            node = stack.pop()
            for nb in graph.neighbors[node]:
                pos = in_subset[nb]
                if pos >= 0 and labels[pos] < 0:
                    labels[pos] = current
                    stack.append(int(nb))
        current += 1
    return labels


def induced_subgraph(graph, subset):
    """Subgraph on `subset` with nodes renumbered densely.

    Returns (subgraph, node_to_parent, parent_to_node) where parent_to_node
    maps parent node ids to dense ids (-1 outside the subset).
    """
    subset = np.asarray(sorted(set(int(i) for i in np.asarray(subset).ravel())))
    if len(subset) == 0:
        raise ContractViolationError("induced_subgraph requires a non-empty subset")
    if subset.min() < 0 or subset.max() >= graph.n:
        raise ContractViolationError("subset node out of range")
    parent_to_node = np.full(graph.n, -1, dtype=np.int64)
    parent_to_node[subset] = np.arange(len(subset))
    if len(graph.edges):
        mask = (parent_to_node[graph.edges[:, 0]] >= 0) & (
            parent_to_node[graph.edges[:, 1]] >= 0
        )
        edges = parent_to_node[graph.edges[mask]]
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    sub = DualGraph.from_edges(len(subset), edges)
    return sub, subset, parent_to_node


def edges_to_csv(graph, path):
    """Debug export of the edge list as `i,j` rows (0-based)."""
    lines = [f"{i},{j}" for i, j in graph.edges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
