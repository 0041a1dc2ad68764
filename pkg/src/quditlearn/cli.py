"""Command-line entry point.

Subcommands:
  run              execute an experiment described by an INI config file
  mos              generate a maximally-orthogonal state set directly
  bloch-export     dump per-point state coordinates for a trained model
  validate-config  parse and echo a config without running anything

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
Dataset paths that are not absolute are resolved against $QUDITLEARN_DATA
when that variable is set.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, mos
from .data import TEST, TRAIN, VALIDATION
from .errors import ConfigError, DataError, NumericalError, QuditLearnError
from .experiments import (
    ExperimentConfig,
    export_bloch,
    load_dataset,
    run_experiment,
)
from .metric import load_model

DATA_ENV = "QUDITLEARN_DATA"


def _resolve_data_path(raw: str) -> str:
    if not raw:
        return raw
    p = Path(raw)
    if p.is_absolute() or p.exists():
        return str(p)
    base = os.environ.get(DATA_ENV)
    if base and (Path(base) / p).exists():
        return str(Path(base) / p)
    return str(p)


def _get(parser, section, key, fallback=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return fallback


def _ints(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _words(text):
    return tuple(text.replace(",", " ").split())


def parse_config(path, seed_override=None, jobs_override=None,
                 out_override=None) -> ExperimentConfig:
    """Read the flat key-value config document into an ExperimentConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")

    try:
        kw = {}
        kw["kind"] = parser.get("experiment", "kind")
        kw["seed"] = parser.getint("experiment", "seed", fallback=0)
        kw["out_dir"] = _get(parser, "experiment", "out", "results")
        kw["jobs"] = parser.getint("experiment", "jobs", fallback=1)

        if parser.has_section("dataset"):
            kw["dataset"] = _get(parser, "dataset", "name", "iris")
            kw["data_path"] = _resolve_data_path(_get(parser, "dataset", "path", ""))
            kw["wdbc_columns"] = _get(parser, "dataset", "feature_columns", "mean")
            kw["digits_variant"] = _get(parser, "dataset", "variant", "digits8x8")
            if _get(parser, "dataset", "digits"):
                kw["digits"] = _ints(parser.get("dataset", "digits"))
            if _get(parser, "dataset", "train_per_class"):
                kw["train_per_class"] = parser.getint("dataset", "train_per_class")
            if _get(parser, "dataset", "test_per_class"):
                kw["test_per_class"] = parser.getint("dataset", "test_per_class")

        if parser.has_section("model"):
            if _get(parser, "model", "d"):
                kw["d"] = _ints(parser.get("model", "d"))
            kw["layers"] = parser.getint("model", "layers", fallback=1)
            if _get(parser, "model", "encoding"):
                kw["encodings"] = _words(parser.get("model", "encoding"))
            if _get(parser, "model", "method"):
                kw["methods"] = _words(parser.get("model", "method"))
            kw["center_source"] = _get(parser, "model", "centers", "orthonormal")
            kw["mos_file"] = _resolve_data_path(_get(parser, "model", "mos_file", ""))

        if parser.has_section("train"):
            kw["restarts"] = parser.getint("train", "restarts", fallback=10)
            kw["max_epochs"] = parser.getint("train", "max_epochs", fallback=2500)
            kw["learning_rate"] = parser.getfloat("train", "learning_rate",
                                                  fallback=0.05)
            kw["fd_step"] = parser.getfloat("train", "fd_step", fallback=1e-5)
            kw["patience"] = parser.getint("train", "patience", fallback=120)
            kw["optimizer"] = _get(parser, "train", "optimizer", "adam")

        if parser.has_section("mos"):
            if _get(parser, "mos", "d"):
                kw["d"] = _ints(parser.get("mos", "d"))
            kw["mos_k"] = parser.getint("mos", "k", fallback=3)
            kw["mos_weight_exponent"] = parser.getfloat(
                "mos", "weight_exponent", fallback=2.0)
            kw["mos_population"] = parser.getint("mos", "population", fallback=64)
            kw["mos_generations"] = parser.getint("mos", "generations",
                                                  fallback=500)

        if parser.has_section("noise"):
            if _get(parser, "noise", "d"):
                kw["d"] = _ints(parser.get("noise", "d"))
            if _get(parser, "noise", "layers"):
                kw["layers"] = parser.getint("noise", "layers")
            kw["t1"] = parser.getfloat("noise", "t1", fallback=0.1)
            if _get(parser, "noise", "t2"):
                kw["t2"] = _floats(parser.get("noise", "t2"))
            kw["t2_min"] = parser.getfloat("noise", "t2_min", fallback=1e-7)
            kw["t2_max"] = parser.getfloat("noise", "t2_max", fallback=1e-4)
            kw["t2_points"] = parser.getint("noise", "t2_points", fallback=12)
            kw["rabi_hz"] = parser.getfloat("noise", "rabi_hz", fallback=1e7)
            kw["noise_runs"] = parser.getint("noise", "runs", fallback=50)
            kw["noise_epochs"] = parser.getint("noise", "epochs", fallback=30)

        if parser.has_section("pca"):
            if _get(parser, "pca", "dims"):
                kw["pca_dims"] = _ints(parser.get("pca", "dims"))
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if seed_override is not None:
        kw["seed"] = seed_override
    if jobs_override is not None:
        kw["jobs"] = jobs_override
    if out_override is not None:
        kw["out_dir"] = out_override
    return ExperimentConfig(**kw)


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, args.seed, args.jobs, args.out)
    summary = run_experiment(cfg)
    print(f"wrote {Path(cfg.out_dir) / 'results.csv'}")
    for key in ("median_accuracy", "max_accuracy"):
        if key in summary:
            print(f"{key} = {summary[key]:.6f}")
    return 0


def _cmd_validate(args) -> int:
    cfg = parse_config(args.config, args.seed, args.jobs, args.out)
    print(json.dumps(asdict(cfg), indent=2, default=list))
    return 0


def _cmd_mos(args) -> int:
    ga = mos.GAConfig(
        population_size=args.population,
        max_generations=args.generations,
        weight_exponent=args.weight_exponent,
        seed=args.seed,
    )
    best = mos.evolve(ga, args.d, args.k)
    mos.save_mos(best.states, args.out, weight_exponent=args.weight_exponent)
    gram = mos.gram_matrix(best.states)
    print(f"wrote {args.out}; energy = {-best.fitness!r}")
    if args.gram:
        lines = [",".join(repr(float(v)) for v in row) for row in gram]
        Path(args.gram).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.gram}")
    return 0


def _cmd_bloch(args) -> int:
    model = load_model(args.model)
    cfg = parse_config(args.config)
    ds = load_dataset(cfg)
    which = {"train": TRAIN, "validation": VALIDATION, "test": TEST}[args.split]
    X, y = ds.subset(which)
    n = export_bloch(model, X, y, args.out)
    print(f"wrote {args.out} ({n} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditlearn",
        description="qudit classifier experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker processes for restarts")
        p.add_argument("--out", default=None, help="output directory")

    p_run = sub.add_parser("run", help="run a configured experiment")
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate-config", help="check a config file")
    add_common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_mos = sub.add_parser("mos", help="generate maximally orthogonal states")
    p_mos.add_argument("--d", type=int, required=True)
    p_mos.add_argument("--k", type=int, required=True)
    p_mos.add_argument("--weight-exponent", type=float, default=2.0)
    p_mos.add_argument("--population", type=int, default=64)
    p_mos.add_argument("--generations", type=int, default=500)
    p_mos.add_argument("--seed", type=int, default=0)
    p_mos.add_argument("--out", required=True)
    p_mos.add_argument("--gram", default=None,
                       help="also dump the overlap matrix")
    p_mos.set_defaults(func=_cmd_mos)

    p_bloch = sub.add_parser("bloch-export",
                             help="export state coordinates for a model")
    p_bloch.add_argument("--model", required=True)
    p_bloch.add_argument("--config", required=True,
                         help="config describing the dataset")
    p_bloch.add_argument("--split", default="test",
                         choices=["train", "validation", "test"])
    p_bloch.add_argument("--out", required=True)
    p_bloch.set_defaults(func=_cmd_bloch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except QuditLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
