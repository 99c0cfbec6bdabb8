"""Training losses: expected normalized cut, L2 regularization, physical
penalty, and their homogeneous / heterogeneous combinations.

Every loss accepts either a plain ndarray Y (returns a float) or an
autodiff Var (returns a Var), so the same formulas serve evaluation and
training.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Var
from .errors import DegeneratePartitionError, ShapeError

__all__ = [
    "normalized_cut_loss",
    "l2_weight_norm",
    "homogeneous_loss",
    "physical_penalty_matrix",
    "physical_penalty",
    "heterogeneous_loss",
]

GAMMA_FLOOR = 1e-12


def _as_float(result):
    return float(result.value) if isinstance(result, Var) else float(result)


def normalized_cut_loss(Y, graph):
    """Expected normalized cut of soft assignments Y over a graph.

    Each undirected edge contributes both orientations. Raises if either
    class volume Gamma_k falls below 1e-12.
    """
    is_var = isinstance(Y, Var)
    value = Y.value if is_var else np.asarray(Y, dtype=np.float64)
    if value.ndim != 2 or value.shape != (graph.n, 2):
        raise ShapeError(f"Y must be ({graph.n}, 2), got {value.shape}")
    degrees = graph.degrees.astype(np.float64)[:, None]
    gamma_values = (value * degrees).sum(axis=0)
    if np.any(gamma_values < GAMMA_FLOOR):
        raise DegeneratePartitionError(
            f"class volume collapsed: Gamma = {gamma_values.tolist()}"
        )
    if graph.n_edges == 0:
        return (Y.sum() * 0.0) if is_var else 0.0
    src = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
    dst = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    if is_var:
        gamma = (Y * degrees).sum(axis=0, keepdims=True)
        term = Y.gather_rows(src) * (1.0 - Y.gather_rows(dst))
        return (term / gamma).sum()
    term = value[src] * (1.0 - value[dst])
    return float((term / gamma_values[None, :]).sum())


def l2_weight_norm(weights):
    """Sum of squared entries over a list of weight matrices (no biases)."""
    total = 0.0
    for w in weights:
        total = total + (w * w).sum()
    return total


def homogeneous_loss(Y, graph, params, weight_decay):
    """Normalized cut plus lambda * ||W||_2^2 (weights only)."""
    reg = l2_weight_norm(params.weights())
    return normalized_cut_loss(Y, graph) + weight_decay * reg


def physical_penalty_matrix(p):
    """N x 2 matrix with rescaled p in column one and its complement in two."""
    p = np.asarray(p, dtype=np.float64)
    lo, hi = p.min(), p.max()
    scaled = (p - lo) / (hi - lo) if hi > lo else np.zeros_like(p)
    return np.column_stack([scaled, 1.0 - scaled])


def physical_penalty(P, Y):
    """Sum of the element-wise product P ⊙ Y over all entries."""
    P = np.asarray(P, dtype=np.float64)
    value = Y.value if isinstance(Y, Var) else np.asarray(Y, dtype=np.float64)
    if P.shape != value.shape:
        raise ShapeError(f"P shape {P.shape} does not match Y shape {value.shape}")
    if isinstance(Y, Var):
        return (Y * P).sum()
    return float((P * value).sum())


def heterogeneous_loss(P, Y, graph, params, alpha, beta, weight_decay):
    """alpha * penalty + beta * (normalized cut + lambda * ||W||_2^2)."""
    return alpha * physical_penalty(P, Y) + beta * homogeneous_loss(
        Y, graph, params, weight_decay
    )
