"""Structured tetrahedral test meshes (no external mesh generator needed)."""

import numpy as np

from polyagg.mesh import TetMesh

# Kuhn subdivision of the unit cube into 6 tets around the main diagonal.
_KUHN_TETS = [
    (0, 1, 3, 7),
    (0, 1, 5, 7),
    (0, 2, 3, 7),
    (0, 2, 6, 7),
    (0, 4, 5, 7),
    (0, 4, 6, 7),
]


def box_mesh(nx, ny, nz, origin=(0.0, 0.0, 0.0), size=1.0, region_fn=None, params=None):
    """Tet mesh of a box of nx*ny*nz cells, 6 tets per cell.

    `region_fn(centroid) -> label` assigns region labels (default 1);
    `params` maps labels to rho (marks the mesh as carrying explicit
    physical parameters).
    """
    origin = np.asarray(origin, dtype=np.float64)
    hx, hy, hz = size / nx, size / ny, size / nz

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    vertices = np.array(
        [
            origin + [i * hx, j * hy, k * hz]
            for i in range(nx + 1)
            for j in range(ny + 1)
            for k in range(nz + 1)
        ]
    )
    tets, regions = [], []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                corners = [
                    vid(i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))
                    for c in range(8)
                ]
                for tet in _KUHN_TETS:
                    ids = [corners[c] for c in tet]
                    tets.append(ids)
                    centroid = vertices[ids].mean(axis=0)
                    regions.append(1 if region_fn is None else int(region_fn(centroid)))
    return TetMesh(
        vertices=vertices,
        tets=np.asarray(tets),
        region_of_tet=np.asarray(regions),
        param_of_region=dict(params or {}),
        params_explicit=params is not None,
    )


def unit_cube_mesh(n, **kwargs):
    return box_mesh(n, n, n, **kwargs)


def two_region_cube(n, rho_low=0.0, rho_high=1.0):
    """Unit cube split by the plane x = 0.5 into two parameter regions."""
    return box_mesh(
        n, n, n,
        region_fn=lambda c: 2 if c[0] > 0.5 else 1,
        params={1: rho_low, 2: rho_high},
    )


def single_tet_mesh():
    return TetMesh(
        vertices=np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float),
        tets=np.array([[0, 1, 2, 3]]),
        region_of_tet=np.array([1]),
    )


def two_tet_mesh(regions=(1, 1), params=None):
    """Two tets sharing the face (0, 1, 2)."""
    return TetMesh(
        vertices=np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, -1]], dtype=float
        ),
        tets=np.array([[0, 1, 2, 3], [0, 1, 2, 4]]),
        region_of_tet=np.asarray(regions),
        param_of_region=dict(params or {}),
        params_explicit=params is not None,
    )


def path_graph(n):
    from polyagg.dualgraph import DualGraph

    return DualGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    from polyagg.dualgraph import DualGraph

    return DualGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def grid_graph(nx, ny, nz=1):
    from polyagg.dualgraph import DualGraph

    def nid(i, j, k):
        return (i * ny + j) * nz + k

    edges = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if i + 1 < nx:
                    edges.append((nid(i, j, k), nid(i + 1, j, k)))
                if j + 1 < ny:
                    edges.append((nid(i, j, k), nid(i, j + 1, k)))
                if k + 1 < nz:
                    edges.append((nid(i, j, k), nid(i, j, k + 1)))
    return DualGraph.from_edges(nx * ny * nz, edges)


def random_connected_graph(n, rng, extra_edge_prob=0.2):
    """Random spanning tree plus extra random edges."""
    edges = [(int(rng.integers(i)), i) for i in range(1, n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.append((i, j))
    from polyagg.dualgraph import DualGraph

    return DualGraph.from_edges(n, edges)
