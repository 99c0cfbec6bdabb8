"""Unsupervised training loop with random-rotation augmentation.

A training sample bundles a dual graph with its raw (un-normalized)
feature matrix; each iteration rotates the raw coordinates, re-normalizes,
runs the network and minimizes the expected normalized cut (plus the
physical penalty for the heterogeneous model).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape
from .errors import ConfigurationError, DegeneratePartitionError
from .features import normalize_features, random_rotation
from .gnn import CONFIGS, init_params, model_forward, save_checkpoint
from .losses import (
    heterogeneous_loss,
    homogeneous_loss,
    physical_penalty_matrix,
)
from .optim import AdamState, adam_step

__all__ = ["TrainSample", "TrainConfig", "train", "split_dataset", "write_history_csv"]

# Heterogeneous loss weights (homogeneous training uses the cut loss alone).
DEFAULT_ALPHA = 1.28
DEFAULT_BETA = 2.2e-4

# Per-model defaults: (epochs, batch size, learning rate, weight decay).
DEFAULT_HYPERPARAMETERS = {
    "base": (300, 4, 1e-5, 1e-5),
    "enhanced": (400, 4, 1e-4, 1e-5),
    "hetero": (150, 4, 1e-4, 1e-5),
}


@dataclass(frozen=True)
class TrainSample:
    graph: object
    features: np.ndarray  # raw N x 4 or N x 5


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 4
    learning_rate: float = 1e-4
    weight_decay: float = 1e-5
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    seed: int = 0
    augment: bool = True
    checkpoint_every: int = 0
    checkpoint_prefix: str = ""

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs must be >= 0 and batch size >= 1")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ConfigurationError("learning rate and weight decay must be positive")

    @classmethod
    def defaults_for(cls, model, **overrides):
        epochs, batch, lr, wd = DEFAULT_HYPERPARAMETERS[model]
        base = dict(epochs=epochs, batch_size=batch, learning_rate=lr, weight_decay=wd)
        base.update(overrides)
        return cls(**base)


def split_dataset(samples, seed, val_fraction=0.2):
    """Seeded whole-mesh split into (train, validation) lists."""
    order = np.random.default_rng(seed).permutation(len(samples))
    n_val = int(round(len(samples) * val_fraction))
    val_idx = set(order[:n_val].tolist())
    train = [s for i, s in enumerate(samples) if i not in val_idx]
    val = [s for i, s in enumerate(samples) if i in val_idx]
    return train, val


def _sample_loss(sample, params, config, rotation=None, taped=False):
    X = np.array(sample.features, dtype=np.float64)
    if rotation is not None:
        X[:, :3] = X[:, :3] @ rotation.T
    mode = "base" if params.config == "base" else "enhanced"
    Xn = normalize_features(X, sample.graph, mode)
    if taped:
        tape = Tape()
        Y, param_vars = model_forward(sample.graph, Xn, params, tape=tape)
    else:
        tape = None
        Y, param_vars = model_forward(sample.graph, Xn, params), params
    if params.config == "hetero":
        P = physical_penalty_matrix(sample.features[:, 4])
        loss = heterogeneous_loss(
            P, Y, sample.graph, param_vars, config.alpha, config.beta,
            config.weight_decay,
        )
    else:
        loss = homogeneous_loss(Y, sample.graph, param_vars, config.weight_decay)
    return loss, tape, param_vars


def _mean_loss(samples, params, config):
    values = []
    for sample in samples:
        try:
            loss, _, _ = _sample_loss(sample, params, config)
        except DegeneratePartitionError:
            continue
        values.append(loss)
    return float(np.mean(values)) if values else float("nan")


def train(dataset, config, model="enhanced", params=None, val_dataset=None):
    """Train a bisection network; returns (params, per-epoch history).

    History entries are dicts with epoch, train_loss and (when a validation
    set is given) val_loss. Samples whose loss degenerates to a single
    class are skipped with a warning.
    """
    if not dataset:
        raise ConfigurationError("training dataset is empty")
    model_config = CONFIGS[model] if isinstance(model, str) else model
    for sample in dataset:
        if sample.features.shape[1] != model_config.input_width:
            raise ConfigurationError(
                f"sample has {sample.features.shape[1]} feature columns, "
                f"model {model_config.name!r} expects {model_config.input_width}"
            )
    if params is None:
        params = init_params(model_config, config.seed)
    else:
        params = params.copy()
    tensors = params.tensors()
    state = AdamState.for_tensors(tensors)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [dataset[i] for i in order[start : start + config.batch_size]]
            grads = [np.zeros_like(t) for t in tensors]
            batch_losses = []
            for sample in batch:
                rotation = random_rotation(rng) if config.augment else None
                try:
                    loss, tape, param_vars = _sample_loss(
                        sample, params, config, rotation, taped=True
                    )
                except DegeneratePartitionError as exc:
                    warnings.warn(f"skipping degenerate sample: {exc}", stacklevel=2)
                    continue
                tape.backward(loss)
                for k, var in enumerate(param_vars.tensors()):
                    if var.grad is not None:
                        grads[k] += var.grad
                batch_losses.append(float(loss.value))
            if not batch_losses:
                continue
            for g in grads:
                g /= len(batch_losses)
            adam_step(tensors, grads, state, config.learning_rate)
            epoch_losses.extend(batch_losses)
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(epoch_losses)) if epoch_losses else float("nan"),
        }
        if val_dataset is not None:
            entry["val_loss"] = _mean_loss(val_dataset, params, config)
        history.append(entry)
        if (
            config.checkpoint_every
            and config.checkpoint_prefix
            and epoch % config.checkpoint_every == 0
        ):
            save_checkpoint(params, f"{config.checkpoint_prefix}.epoch{epoch}.json")
    return params, history


def write_history_csv(history, path):
    """Write per-epoch losses as history.csv (epoch, train_loss, val_loss)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for entry in history:
            writer.writerow(
                [entry["epoch"], entry["train_loss"], entry.get("val_loss", "")]
            )
