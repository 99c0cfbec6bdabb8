"""Training loop behavior: decay, determinism, splits and history output."""

import warnings

import numpy as np
import pytest

from meshgen import box_mesh, two_region_cube
from polyagg.dualgraph import extract_dual_graph
from polyagg.errors import ConfigurationError
from polyagg.features import build_features
from polyagg.gnn import init_params
from polyagg.train import (
    DEFAULT_HYPERPARAMETERS,
    TrainConfig,
    TrainSample,
    split_dataset,
    train,
    write_history_csv,
)


def make_samples(dims_list, with_physical=False):
    samples = []
    for dims in dims_list:
        if with_physical:
            mesh = two_region_cube(dims[0])
        else:
            mesh = box_mesh(*dims)
        samples.append(
            TrainSample(extract_dual_graph(mesh), build_features(mesh, with_physical))
        )
    return samples


def test_defaults_match_published_hyperparameters():
    assert DEFAULT_HYPERPARAMETERS["base"] == (300, 4, 1e-5, 1e-5)
    assert DEFAULT_HYPERPARAMETERS["enhanced"] == (400, 4, 1e-4, 1e-5)
    assert DEFAULT_HYPERPARAMETERS["hetero"] == (150, 4, 1e-4, 1e-5)
    cfg = TrainConfig.defaults_for("hetero", seed=9)
    assert cfg.epochs == 150 and cfg.learning_rate == 1e-4 and cfg.seed == 9
    assert cfg.alpha == 1.28 and cfg.beta == 2.2e-4


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=-1)
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=1, batch_size=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=1, learning_rate=0.0)


def test_loss_decreases_on_small_dataset():
    samples = make_samples([(2, 2, 2), (3, 2, 2)])
    config = TrainConfig(epochs=25, learning_rate=1e-3, seed=0, augment=False)
    _, history = train(samples, config, model="base")
    assert history[-1]["train_loss"] < history[0]["train_loss"]
    assert all(np.isfinite(h["train_loss"]) for h in history)


def test_zero_epochs_returns_initial_params():
    samples = make_samples([(2, 2, 2)])
    config = TrainConfig(epochs=0, seed=4)
    params, history = train(samples, config, model="base")
    assert history == []
    for a, b in zip(params.tensors(), init_params("base", 4).tensors()):
        np.testing.assert_array_equal(a, b)


def test_training_is_deterministic():
    samples = make_samples([(2, 2, 2), (2, 2, 3)])
    config = TrainConfig(epochs=5, seed=12)
    p1, h1 = train(samples, config, model="base")
    p2, h2 = train(samples, config, model="base")
    assert h1 == h2
    for a, b in zip(p1.tensors(), p2.tensors()):
        np.testing.assert_array_equal(a, b)


def test_initial_params_are_not_mutated():
    samples = make_samples([(2, 2, 2)])
    start = init_params("base", 1)
    snapshot = [t.copy() for t in start.tensors()]
    train(samples, TrainConfig(epochs=2, seed=1), model="base", params=start)
    for a, b in zip(start.tensors(), snapshot):
        np.testing.assert_array_equal(a, b)


def test_hetero_training_runs():
    samples = make_samples([(3,), (4,)], with_physical=True)
    config = TrainConfig(epochs=3, seed=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params, history = train(samples, config, model="hetero")
    assert params.config == "hetero"
    assert len(history) == 3


def test_feature_width_mismatch_rejected():
    samples = make_samples([(2, 2, 2)])
    with pytest.raises(ConfigurationError):
        train(samples, TrainConfig(epochs=1), model="hetero")
    with pytest.raises(ConfigurationError):
        train([], TrainConfig(epochs=1), model="base")


def test_validation_loss_recorded():
    train_set = make_samples([(2, 2, 2)])
    val_set = make_samples([(3, 2, 2)])
    config = TrainConfig(epochs=2, seed=0)
    _, history = train(train_set, config, model="base", val_dataset=val_set)
    assert all("val_loss" in h and np.isfinite(h["val_loss"]) for h in history)


def test_split_dataset_is_seeded_partition():
    samples = list(range(10))
    train_a, val_a = split_dataset(samples, seed=3, val_fraction=0.2)
    train_b, val_b = split_dataset(samples, seed=3, val_fraction=0.2)
    assert train_a == train_b and val_a == val_b
    assert len(val_a) == 2 and len(train_a) == 8
    assert sorted(train_a + val_a) == samples


def test_checkpoint_every_writes_files(tmp_path):
    samples = make_samples([(2, 2, 2)])
    config = TrainConfig(
        epochs=4,
        seed=0,
        checkpoint_every=2,
        checkpoint_prefix=str(tmp_path / "ck"),
    )
    train(samples, config, model="base")
    assert (tmp_path / "ck.epoch2.json").exists()
    assert (tmp_path / "ck.epoch4.json").exists()
    assert not (tmp_path / "ck.epoch3.json").exists()


def test_write_history_csv(tmp_path):
    history = [
        {"epoch": 1, "train_loss": 0.5, "val_loss": 0.6},
        {"epoch": 2, "train_loss": 0.4},
    ]
    path = tmp_path / "history.csv"
    write_history_csv(history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss"
    assert lines[1] == "1,0.5,0.6"
    assert lines[2] == "2,0.4,"
