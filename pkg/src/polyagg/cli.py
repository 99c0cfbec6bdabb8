"""Command-line entry point: train, agglomerate, bench.

Every run writes a JSON manifest with the resolved flags and seed, so any
result can be reproduced byte-for-byte by re-running with the manifest's
settings. Exit codes: 0 success, 2 usage error, 3 data/validation error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .agglomerate import AgglomerationConfig, agglomerate
from .bisection import GNNBisector, KMeansBisector, MultilevelBisector
from .dualgraph import extract_dual_graph
from .errors import (
    CheckpointError,
    ConfigurationError,
    ContractViolationError,
    DegenerateGeometryError,
    DegeneratePartitionError,
    MeshFormatError,
    NonManifoldError,
    PolyaggError,
    TrainingError,
    UnsupportedFormatError,
    ValidationError,
)
from .features import build_features
from .gnn import save_checkpoint
from .mesh import read_msh, write_vtk
from .quality import (
    bench_runtime,
    quality_report,
    write_bench_csv,
    write_report_csv,
    write_summary_json,
)
from .train import TrainConfig, TrainSample, split_dataset, train, write_history_csv

USAGE_ERRORS = (ConfigurationError, ContractViolationError)
DATA_ERRORS = (
    MeshFormatError,
    UnsupportedFormatError,
    ValidationError,
    NonManifoldError,
    CheckpointError,
)
NUMERIC_ERRORS = (TrainingError, DegeneratePartitionError, DegenerateGeometryError)


def _resolve_seed(value):
    """Seeds are mandatory; `auto` draws one and records it in the manifest."""
    if value == "auto":
        return int(np.random.default_rng().integers(2**31 - 1))
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"--seed must be an integer or 'auto', got {value!r}")


def _write_manifest(path, command, flags, outputs, started):
    payload = {
        "command": command,
        "flags": flags,
        "seed": flags.get("seed"),
        "outputs": outputs,
        "tool_version": __version__,
        "wall_clock_seconds": time.time() - started,
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def _make_model(spec):
    if spec == "kmeans":
        return KMeansBisector()
    if spec == "multilevel":
        return MultilevelBisector()
    if spec.startswith("gnn:"):
        return GNNBisector.from_checkpoint(spec[4:])
    raise ConfigurationError(
        f"unknown model {spec!r}; expected gnn:<checkpoint>, kmeans or multilevel"
    )


def _load_dataset(data_dir, with_physical):
    paths = sorted(Path(data_dir).glob("*.msh"))
    if not paths:
        raise ConfigurationError(f"no .msh files in {data_dir}")
    samples = []
    for path in paths:
        mesh = read_msh(path)
        if with_physical and not mesh.params_explicit:
            raise ConfigurationError(
                f"{path} has no rho sidecar, required for the heterogeneous model"
            )
        graph = extract_dual_graph(mesh)
        samples.append(TrainSample(graph, build_features(mesh, with_physical)))
    return samples


def cmd_train(args):
    started = time.time()
    seed = _resolve_seed(args.seed)
    samples = _load_dataset(args.data, with_physical=args.model == "hetero")
    config = TrainConfig.defaults_for(
        args.model,
        seed=seed,
        augment=not args.no_augment,
        checkpoint_every=args.checkpoint_every,
        checkpoint_prefix=str(Path(args.out).with_suffix("")),
    )
    if args.epochs is not None:
        config.epochs = args.epochs
    if args.lr is not None:
        config.learning_rate = args.lr
    if args.wd is not None:
        config.weight_decay = args.wd
    if args.batch is not None:
        config.batch_size = args.batch
    train_set, val_set = split_dataset(samples, seed, args.val_fraction)
    if not train_set:
        train_set, val_set = samples, []
    params, history = train(
        train_set, config, model=args.model, val_dataset=val_set or None
    )
    save_checkpoint(params, args.out)
    history_path = args.history or str(Path(args.out).with_suffix(".history.csv"))
    write_history_csv(history, history_path)
    flags = {
        "model": args.model,
        "data": str(args.data),
        "epochs": config.epochs,
        "batch": config.batch_size,
        "lr": config.learning_rate,
        "wd": config.weight_decay,
        "alpha": config.alpha,
        "beta": config.beta,
        "seed": seed,
        "augment": config.augment,
        "val_fraction": args.val_fraction,
    }
    _write_manifest(
        str(args.out) + ".manifest.json",
        "train",
        flags,
        {"checkpoint": str(args.out), "history": history_path},
        started,
    )
    return 0


def cmd_agglomerate(args):
    started = time.time()
    seed = _resolve_seed(args.seed)
    mesh = read_msh(args.mesh)
    model = _make_model(args.model)
    cfg = AgglomerationConfig(
        target_abs=args.target_abs,
        target_frac=args.target_frac,
        min_element_size=args.min_element_size,
    )
    agg = agglomerate(mesh, model, cfg, seed=seed)
    prefix = args.out_prefix or str(Path(args.mesh).with_suffix(""))
    agg_path = prefix + ".agg.json"
    vtk_path = prefix + ".vtk"
    report_path = prefix + ".report.csv"
    summary_path = prefix + ".summary.json"
    agg.to_json(agg_path, mesh_name=str(args.mesh))
    write_vtk(mesh, agg, vtk_path)
    report = quality_report(agg, seed=seed)
    write_report_csv(report, report_path)
    write_summary_json(report, summary_path)
    flags = {
        "mesh": str(args.mesh),
        "model": args.model,
        "target_abs": args.target_abs,
        "target_frac": args.target_frac,
        "min_element_size": args.min_element_size,
        "seed": seed,
    }
    outputs = {
        "assignment": agg_path,
        "vtk": vtk_path,
        "report": report_path,
        "summary": summary_path,
    }
    _write_manifest(prefix + ".manifest.json", "agglomerate", flags, outputs, started)
    print(f"agglomerated {mesh.n_tets} tets into {agg.n_elements} elements")
    return 0


def cmd_bench(args):
    started = time.time()
    seed = _resolve_seed(args.seed)
    mesh_paths = [Path(p) for p in args.meshes]
    if not mesh_paths:
        raise ConfigurationError("no meshes given")
    models = {spec: _make_model(spec) for spec in args.models.split(",")}
    needs_physical = any(getattr(m, "needs_physical", False) for m in models.values())
    instances = []
    for path in mesh_paths:
        mesh = read_msh(path)
        graph = extract_dual_graph(mesh)
        instances.append((path.name, graph, build_features(mesh, needs_physical)))
    instances.sort(key=lambda item: item[1].n)
    rows = bench_runtime(models, instances, repetitions=args.reps)
    write_bench_csv(rows, args.out)
    flags = {
        "models": args.models,
        "meshes": [str(p) for p in mesh_paths],
        "reps": args.reps,
        "seed": seed,
    }
    _write_manifest(args.out + ".manifest.json", "bench", flags, {"bench": args.out}, started)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyagg",
        description="Polyhedral mesh agglomeration by recursive graph bisection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a GNN bisection model")
    p_train.add_argument("--model", choices=["base", "enhanced", "hetero"], required=True)
    p_train.add_argument("--data", required=True, help="directory of .msh files")
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--wd", type=float, default=None)
    p_train.add_argument("--batch", type=int, default=None)
    p_train.add_argument("--seed", required=True, help="integer or 'auto'")
    p_train.add_argument("--no-augment", action="store_true")
    p_train.add_argument("--val-fraction", type=float, default=0.2)
    p_train.add_argument("--history", default=None)
    p_train.add_argument("--checkpoint-every", type=int, default=0)
    p_train.set_defaults(func=cmd_train)

    p_agg = sub.add_parser("agglomerate", help="agglomerate a mesh")
    p_agg.add_argument("mesh")
    p_agg.add_argument("--model", required=True, help="gnn:<ckpt> | kmeans | multilevel")
    p_agg.add_argument("--target-frac", type=float, default=None)
    p_agg.add_argument("--target-abs", type=float, default=None)
    p_agg.add_argument("--min-element-size", type=int, default=2)
    p_agg.add_argument("--seed", required=True, help="integer or 'auto'")
    p_agg.add_argument("--out-prefix", default=None)
    p_agg.set_defaults(func=cmd_agglomerate)

    p_bench = sub.add_parser("bench", help="time bisection models on meshes")
    p_bench.add_argument("--models", required=True, help="comma-separated model specs")
    p_bench.add_argument("--meshes", nargs="+", required=True)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--out", default="bench.csv")
    p_bench.add_argument("--seed", default="0", help="integer or 'auto'")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PolyaggError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
