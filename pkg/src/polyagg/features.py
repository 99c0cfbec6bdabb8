"""Node feature assembly and the model's normalization layer.

Features per dual-graph node are the tet centroid coordinates, the tet
volume and (heterogeneous variant) the physical parameter rho of the tet's
region. Normalization covers coordinate standardization or [-1, 1]
rescaling, [0, 1] min-max rescaling of volume and rho, rho smoothing over
adjacent nodes, and rotation aligning the maximum stretch direction with
the x-axis.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, ShapeError

__all__ = [
    "build_features",
    "normalize_features",
    "principal_axis_rotation",
    "random_rotation",
]

_ISOTROPY_GAP = 1e-12


def build_features(mesh, with_physical=False):
    """Assemble the raw N x 4 (or N x 5) feature matrix of a mesh."""
    from .mesh import tet_centroids, tet_volumes

    centroids = tet_centroids(mesh)
    volumes = tet_volumes(mesh)
    columns = [centroids, volumes[:, None]]
    if with_physical:
        if not mesh.params_explicit:
            raise ConfigurationError(
                "physical features requested but the mesh has no rho sidecar"
            )
        columns.append(mesh.rho_of_tet()[:, None])
    return np.hstack(columns)


def _minmax_01(column):
    lo, hi = column.min(), column.max()
    if hi - lo == 0.0:
        return np.zeros_like(column)
    return (column - lo) / (hi - lo)


def _minmax_pm1(column):
    return 2.0 * _minmax_01(column) - 1.0 if column.max() > column.min() else np.zeros_like(column)


def _standardize(column):
    sd = column.std()
    if sd == 0.0:
        return np.zeros_like(column)
    return (column - column.mean()) / sd


def smooth_over_neighbors(values, graph, include_self=True):
    """Replace each value by the mean over the node and/or its neighbors."""
    out = np.empty_like(values)
    for i in range(graph.n):
        nbrs = graph.neighbors[i]
        if include_self:
            out[i] = (values[i] + values[nbrs].sum()) / (1 + len(nbrs))
        else:
            out[i] = values[nbrs].mean() if len(nbrs) else values[i]
    return out


def normalize_features(X, graph, mode, smooth_include_self=True):
    """Apply the normalization layer to a raw feature matrix.

    mode "base": coordinates min-max rescaled to [-1, 1];
    mode "enhanced": coordinates standardized to mean 0, variance 1.
    Both modes rescale volumes to [0, 1]; a fifth column (rho) is rescaled
    to [0, 1] and smoothed over adjacent nodes. Coordinates are finally
    rotated to align the maximum stretch direction with the x-axis.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] not in (4, 5):
        raise ShapeError("feature matrix must be N x 4 or N x 5")
    if X.shape[0] != graph.n:
        raise ShapeError("feature rows must match graph node count")
    if mode not in ("base", "enhanced"):
        raise ConfigurationError(f"unknown normalization mode {mode!r}")
    out = X.copy()
    scale = _minmax_pm1 if mode == "base" else _standardize
    for c in range(3):
        out[:, c] = scale(X[:, c])
    out[:, 3] = _minmax_01(X[:, 3])
    if X.shape[1] == 5:
        rho = _minmax_01(X[:, 4])
        out[:, 4] = smooth_over_neighbors(rho, graph, include_self=smooth_include_self)
    rotation = principal_axis_rotation(out[:, :3])
    out[:, :3] = out[:, :3] @ rotation.T
    return out


def principal_axis_rotation(coords):
    """Rotation mapping the principal stretch axes to +x, +y, +z.

    Eigenvector signs are fixed toward the axis each one maps to (ties
    broken toward +y, then +z). Near-isotropic covariance yields identity.
    """
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    if len(coords) < 2:
        return np.eye(3)
    centered = coords - coords.mean(axis=0)
    cov = centered.T @ centered / len(coords)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    if eigvals[0] - eigvals[2] < _ISOTROPY_GAP:
        return np.eye(3)
    rows = []
    for k in range(3):
        v = eigvecs[:, k]
        for axis in (k, 1, 2):  # preferred axis first, ties toward +y then +z
            if abs(v[axis]) > 1e-12:
                if v[axis] < 0:
                    v = -v
                break
        rows.append(v)
    rotation = np.vstack(rows)
    if np.linalg.det(rotation) < 0:
        rotation[2] = -rotation[2]
    return rotation


def random_rotation(rng):
    """Rotation drawn uniformly from SO(3) via unit-quaternion sampling."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
