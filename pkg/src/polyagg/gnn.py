"""SAGE-convolution bisection networks (base, enhanced, hetero variants).

The network is a stack of mean-aggregation SAGE layers with tanh, followed
by a decreasing MLP (tanh between hidden layers) and a row-wise softmax
producing class probabilities Y in R^{n x 2}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .autodiff import spmm
from .errors import CheckpointError, ShapeError

__all__ = [
    "ModelConfig",
    "ModelParams",
    "CONFIGS",
    "init_params",
    "mean_aggregation_matrix",
    "model_forward",
    "model_forward_taped",
    "n_parameters",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    name: str
    input_width: int
    sage_widths: tuple
    linear_widths: tuple  # last entry is the 2-class output


CONFIGS = {
    "base": ModelConfig("base", 4, (64, 64, 64, 64), (32, 8, 2)),
    "enhanced": ModelConfig("enhanced", 4, (128, 128, 128, 128), (64, 32, 8, 2)),
    "hetero": ModelConfig("hetero", 5, (128, 128, 128, 128), (64, 32, 8, 2)),
}


@dataclass
class ModelParams:
    """Weights of a bisection network. Treated as immutable during inference."""

    config: str
    sage_layers: list    # (w_self, w_neigh, bias) triples, weights (in, out)
    linear_layers: list  # (w, bias) pairs

    @property
    def model_config(self):
        return CONFIGS[self.config]

    def tensors(self):
        """All parameter arrays in a fixed order."""
        out = []
        for w_self, w_neigh, bias in self.sage_layers:
            out += [w_self, w_neigh, bias]
        for w, bias in self.linear_layers:
            out += [w, bias]
        return out

    def weights(self):
        """Weight matrices only (biases excluded), for L2 regularization."""
        out = [w for w, _, _ in self.sage_layers]
        out += [wn for _, wn, _ in self.sage_layers]
        out += [w for w, _ in self.linear_layers]
        return out

    def copy(self):
        return ModelParams(
            config=self.config,
            sage_layers=[(a.copy(), b.copy(), c.copy()) for a, b, c in self.sage_layers],
            linear_layers=[(a.copy(), b.copy()) for a, b in self.linear_layers],
        )


def _glorot(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(config, seed):
    """Glorot-uniform weights and zero biases, deterministic per seed."""
    if isinstance(config, str):
        config = CONFIGS[config]
    rng = np.random.default_rng(seed)
    sage_layers = []
    width = config.input_width
    for out_width in config.sage_widths:
        sage_layers.append(
            (
                _glorot(rng, width, out_width),
                _glorot(rng, width, out_width),
                np.zeros(out_width),
            )
        )
        width = out_width
    linear_layers = []
    for out_width in config.linear_widths:
        linear_layers.append((_glorot(rng, width, out_width), np.zeros(out_width)))
        width = out_width
    return ModelParams(config.name, sage_layers, linear_layers)


def n_parameters(params):
    return sum(t.size for t in params.tensors())


def mean_aggregation_matrix(graph):
    """Row-normalized adjacency (CSR); isolated nodes get an all-zero row."""
    if graph.n_edges == 0:
        return sp.csr_matrix((graph.n, graph.n))
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    inv_deg = np.zeros(graph.n)
    nonzero = graph.degrees > 0
    inv_deg[nonzero] = 1.0 / graph.degrees[nonzero]
    data = inv_deg[rows]
    return sp.csr_matrix((data, (rows, cols)), shape=(graph.n, graph.n))


def _check_input(graph, X, config):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape != (graph.n, config.input_width):
        raise ShapeError(
            f"expected features of shape ({graph.n}, {config.input_width}), "
            f"got {X.shape}"
        )
    return X


def sage_layer(H, aggregation, w_self, w_neigh, bias):
    """tanh(H W_self + mean_neighbors(H) W_neigh + bias)."""
    if H.shape[1] != w_self.shape[0]:
        raise ShapeError("SAGE layer width mismatch")
    return np.tanh(H @ w_self + (aggregation @ H) @ w_neigh + bias)


def model_forward(graph, X, params, tape=None):
    """Forward pass returning Y (n x 2, rows sum to 1).

    With a tape, the pass is recorded for reverse-mode differentiation and
    (Y, parameter Vars) is returned instead.
    """
    config = params.model_config
    X = _check_input(graph, X, config)
    aggregation = mean_aggregation_matrix(graph)
    if tape is not None:
        return _forward_taped(tape, aggregation, X, params)
    H = X
    for w_self, w_neigh, bias in params.sage_layers:
        H = sage_layer(H, aggregation, w_self, w_neigh, bias)
    last = len(params.linear_layers) - 1
    for k, (w, bias) in enumerate(params.linear_layers):
        if H.shape[1] != w.shape[0]:
            raise ShapeError("linear layer width mismatch")
        H = H @ w + bias
        if k < last:
            H = np.tanh(H)
    shifted = H - H.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def model_forward_taped(graph, X, params, tape):
    return model_forward(graph, X, params, tape=tape)


def _forward_taped(tape, aggregation, X, params):
    param_vars = ModelParams(
        config=params.config,
        sage_layers=[
            (tape.var(a), tape.var(b), tape.var(c)) for a, b, c in params.sage_layers
        ],
        linear_layers=[(tape.var(a), tape.var(b)) for a, b in params.linear_layers],
    )
    H = tape.var(X, requires_grad=False)
    for w_self, w_neigh, bias in param_vars.sage_layers:
        H = ((H @ w_self) + (spmm(aggregation, H) @ w_neigh) + bias).tanh()
    last = len(param_vars.linear_layers) - 1
    for k, (w, bias) in enumerate(param_vars.linear_layers):
        H = (H @ w) + bias
        if k < last:
            H = H.tanh()
    # max-subtraction is gradient-neutral for softmax; treat it as constant
    shifted = H - H.value.max(axis=1, keepdims=True)
    e = shifted.exp()
    Y = e / e.sum(axis=1, keepdims=True)
    return Y, param_vars


def save_checkpoint(params, path):
    """Serialize weights to versioned JSON (values round-trip bit-for-bit)."""
    layers = []
    for w_self, w_neigh, bias in params.sage_layers:
        layers.append(
            {
                "kind": "sage",
                "w_self": w_self.ravel().tolist(),
                "w_neigh": w_neigh.ravel().tolist(),
                "bias": bias.tolist(),
                "rows": w_self.shape[0],
                "cols": w_self.shape[1],
            }
        )
    for w, bias in params.linear_layers:
        layers.append(
            {
                "kind": "linear",
                "w": w.ravel().tolist(),
                "bias": bias.tolist(),
                "rows": w.shape[0],
                "cols": w.shape[1],
            }
        )
    payload = {"version": CHECKPOINT_VERSION, "config": params.config, "layers": layers}
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path, expect_config=None):
    """Load a checkpoint, validating version, config and layer shapes."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    name = payload.get("config")
    if name not in CONFIGS:
        raise CheckpointError(f"unknown model config {name!r}")
    if expect_config is not None and name != expect_config:
        raise CheckpointError(f"checkpoint is {name!r}, expected {expect_config!r}")
    config = CONFIGS[name]
    layers = payload.get("layers", [])
    expected_kinds = ["sage"] * len(config.sage_widths) + ["linear"] * len(
        config.linear_widths
    )
    if [layer.get("kind") for layer in layers] != expected_kinds:
        raise CheckpointError("checkpoint layer stack does not match config")
    sage_layers, linear_layers = [], []
    width = config.input_width
    try:
        for layer, out_width in zip(layers, config.sage_widths + config.linear_widths):
            rows, cols = layer["rows"], layer["cols"]
            if (rows, cols) != (width, out_width):
                raise CheckpointError(
                    f"layer shape ({rows}, {cols}) does not match ({width}, {out_width})"
                )
            bias = np.asarray(layer["bias"], dtype=np.float64)
            if bias.shape != (cols,):
                raise CheckpointError("bias shape mismatch")
            if layer["kind"] == "sage":
                w_self = np.asarray(layer["w_self"], dtype=np.float64).reshape(rows, cols)
                w_neigh = np.asarray(layer["w_neigh"], dtype=np.float64).reshape(rows, cols)
                sage_layers.append((w_self, w_neigh, bias))
            else:
                w = np.asarray(layer["w"], dtype=np.float64).reshape(rows, cols)
                linear_layers.append((w, bias))
            width = out_width
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint layer: {exc}") from exc
    return ModelParams(name, sage_layers, linear_layers)
