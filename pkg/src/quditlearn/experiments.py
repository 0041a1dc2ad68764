"""Config-driven experiment drivers behind the command-line runner.

Every experiment writes two artifacts into its output directory: a
delimiter-separated rows file (`results.csv`) that is byte-identical across
reruns with the same config and seed (wall-time columns excluded), and a
`summary.json` document that embeds the full configuration for provenance.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, core, mos
from .data import (
    Dataset,
    apply_pca,
    fit_pca,
    load_breast_cancer,
    load_digits,
    load_iris,
)
from .errors import ConfigError, DimensionError
from .metric import (
    ReferenceSet,
    TrainConfig,
    NoiselessObjective,
    _run_single_restart,
    build_model,
    test_accuracy,
    save_model,
)
from .data import standardize
from .noise import NoiseModel, run_chained

EXPERIMENT_KINDS = (
    "train_eval",
    "encoding_sweep",
    "method_compare",
    "mos_generate",
    "noise_sweep",
    "pca_sweep",
)


@dataclass
class ExperimentConfig:
    kind: str = "train_eval"
    seed: int = 0
    out_dir: str = "results"
    jobs: int = 1

    # dataset selection
    dataset: str = "iris"
    data_path: str = ""
    wdbc_columns: str = "mean"
    digits_variant: str = "digits8x8"
    digits: tuple = ()
    train_per_class: int | None = None
    test_per_class: int | None = None

    # model
    d: tuple = (3,)
    layers: int = 1
    encodings: tuple = ()      # empty -> per-method default (g2/g1)
    methods: tuple = ("explicit",)
    center_source: str = "orthonormal"   # or "mos_file"
    mos_file: str = ""

    # training
    restarts: int = 10
    max_epochs: int = 2500
    learning_rate: float = 0.05
    fd_step: float = 1e-5
    patience: int = 120
    optimizer: str = "adam"

    # mos_generate
    mos_k: int = 3
    mos_weight_exponent: float = 2.0
    mos_population: int = 64
    mos_generations: int = 500

    # noise_sweep
    t1: float = 0.1
    t2: tuple = ()                      # explicit grid; empty -> log sweep
    t2_min: float = 1e-7
    t2_max: float = 1e-4
    t2_points: int = 12
    rabi_hz: float = 1e7
    noise_runs: int = 50
    noise_epochs: int = 30

    # pca_sweep
    pca_dims: tuple = ()

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for d in self.d:
            if d < 2:
                raise ConfigError(f"qudit dimension must be >= 2, got {d}")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.center_source not in ("orthonormal", "mos_file"):
            raise ConfigError(f"unknown center source {self.center_source!r}")
        if self.center_source == "mos_file":
            if not self.mos_file:
                raise ConfigError("center_source = mos_file needs mos_file")
            if not Path(self.mos_file).exists():
                raise ConfigError(f"mos_file {self.mos_file} does not exist")
        if self.kind not in ("mos_generate",) and self.data_path:
            if not Path(self.data_path).exists():
                raise ConfigError(f"data_path {self.data_path} does not exist")


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if not cfg.data_path:
        raise ConfigError("experiment needs a data_path")
    if cfg.dataset == "iris":
        return load_iris(cfg.data_path, seed=cfg.seed)
    if cfg.dataset == "wdbc":
        return load_breast_cancer(cfg.data_path, seed=cfg.seed,
                                  feature_columns=cfg.wdbc_columns)
    if cfg.dataset in ("digits8x8", "mnist"):
        variant = "mnist_idx" if cfg.dataset == "mnist" else cfg.digits_variant
        digits = list(cfg.digits) if cfg.digits else None
        counts = None
        if cfg.train_per_class is not None:
            counts = (cfg.train_per_class, cfg.test_per_class)
        return load_digits(cfg.data_path, variant, digits=digits,
                           per_class_counts=counts, seed=cfg.seed)
    raise ConfigError(f"unknown dataset {cfg.dataset!r}")


def make_centers(cfg: ExperimentConfig, d: int, k: int) -> ReferenceSet:
    if cfg.center_source == "mos_file":
        states = mos.load_mos(cfg.mos_file)
        if states.shape != (k, d):
            raise ConfigError(
                f"mos file holds {states.shape[0]} states in dimension "
                f"{states.shape[1]}, experiment needs ({k}, {d})"
            )
        return ReferenceSet(states)
    if k > d:
        raise ConfigError(
            f"{k} orthonormal centers do not fit in dimension {d}; "
            "generate a MOS file and set center_source = mos_file"
        )
    return ReferenceSet.orthonormal(d, k)


def train_config_for(cfg: ExperimentConfig, method: str) -> TrainConfig:
    return TrainConfig(
        method=method,
        optimizer=cfg.optimizer,
        restarts=1,
        max_epochs=cfg.max_epochs,
        learning_rate=cfg.learning_rate,
        fd_step=cfg.fd_step,
        patience=cfg.patience,
        seed=cfg.seed,
    )
def encoding_for(cfg: ExperimentConfig, method: str) -> str:
    """Configured encoding, or the per-method default (explicit g2, implicit g1)."""
    if cfg.encodings:
        return cfg.encodings[0]
    return "g2" if method == "explicit" else "g1"


def make_spec(encoding, d, data_dim, layers, n_classes) -> core.EncodingSpec:
    """Encoding spec for a K-class problem; g2/g3 start in the class subspace."""
    init = None
    if encoding != "g1":
        init = min(max(n_classes, 2), d)
    return core.EncodingSpec(encoding, d, data_dim, layers, init_levels=init)


def _restart_job(args):
    (xtr, ytr, xte, yte, spec, tc, centers, restart) = args
    refs = ReferenceSet(centers) if centers is not None else None
    scaler = standardize(xtr)
    objective = NoiselessObjective(scaler.apply(xtr), ytr, spec, tc.method, refs)
    rr = _run_single_restart(objective, spec, tc, restart)
    model = build_model(xtr, ytr, spec, tc, rr.params, refs=refs, scaler=scaler)
    acc = test_accuracy(model, xte, yte)
    return {
        "restart": restart,
        "final_loss": rr.final_loss,
        "test_accuracy": acc,
        "n_evals": rr.n_evals,
        "converged": rr.converged,
        "params_vec": rr.params.to_vector(),
        "history": rr.history,
    }


def run_restarts(xtr, ytr, xte, yte, spec, tc, refs, restarts, jobs=1):
    """Independent training restarts, optionally over a process pool.

    Restart r draws its initial parameters from (tc.seed, r), so the results
    do not depend on the degree of parallelism.
    """
    centers = None if refs is None else refs.centers
    args = [
        (xtr, ytr, xte, yte, spec, tc, centers, r) for r in range(restarts)
    ]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_restart_job, args, chunksize=1))
    else:
        results = [_restart_job(a) for a in args]
    return results


def mean_own_class_fidelity(model, X, y) -> float:
    """Average fidelity between each encoded point and its class center."""
    states = model.encode_points(np.atleast_2d(X))
    fid = np.abs(states @ np.asarray(model.centers).conj().T) ** 2
    own = fid[np.arange(len(y)), np.asarray(y)]
    k = model.n_classes
    return float(np.mean([own[np.asarray(y) == c].mean() for c in range(k)]))


# ---------------------------------------------------------------------------
# experiment kinds
# ---------------------------------------------------------------------------


def _summary_stats(accs):
    accs = np.asarray(accs, dtype=float)
    return {
        "median_accuracy": float(np.median(accs)),
        "max_accuracy": float(np.max(accs)),
        "min_accuracy": float(np.min(accs)),
    }


def experiment_train_eval(cfg: ExperimentConfig):
    ds = load_dataset(cfg)
    xtr, ytr = ds.train
    xte, yte = ds.test
    d = cfg.d[0]
    method = cfg.methods[0]
    encoding = encoding_for(cfg, method)
    spec = make_spec(encoding, d, ds.data_dim, cfg.layers, ds.n_classes)
    tc = train_config_for(cfg, method)
    refs = make_centers(cfg, d, ds.n_classes) if method == "explicit" else None
    results = run_restarts(xtr, ytr, xte, yte, spec, tc, refs,
                           cfg.restarts, cfg.jobs)
    rows = [
        {k: r[k] for k in ("restart", "final_loss", "test_accuracy",
                           "n_evals", "converged")}
        for r in results
    ]
    best = int(np.argmin([r["final_loss"] for r in results]))
    model = build_model(
        xtr, ytr, spec, tc,
        core.AnsatzParams.from_vector(spec, results[best]["params_vec"]),
        refs=refs,
    )
    summary = {
        "kind": cfg.kind,
        "d": d,
        "encoding": encoding,
        "method": method,
        **_summary_stats([r["test_accuracy"] for r in results]),
        "best_restart": best,
    }
    curves = [
        {"restart": r["restart"], "evals": e, "loss": l}
        for r in results for (e, l) in r["history"]
    ]
    return rows, summary, {"model": model, "histories": curves}


def _sweep(cfg, combos, label_names):
    """Shared loop for encoding_sweep and method_compare."""
    ds = load_dataset(cfg)
    xtr, ytr = ds.train
    xte, yte = ds.test
    rows = []
    groups = {}
    for combo in combos:
        d = combo["d"]
        spec = make_spec(combo["encoding"], d, ds.data_dim, cfg.layers, ds.n_classes)
        tc = train_config_for(cfg, combo["method"])
        refs = (make_centers(cfg, d, ds.n_classes)
                if combo["method"] == "explicit" else None)
        results = run_restarts(xtr, ytr, xte, yte, spec, tc, refs,
                               cfg.restarts, cfg.jobs)
        key = tuple(combo[n] for n in label_names)
        groups[key] = _summary_stats([r["test_accuracy"] for r in results])
        for r in results:
            row = {n: combo[n] for n in label_names}
            row.update({k: r[k] for k in ("restart", "final_loss",
                                          "test_accuracy")})
            rows.append(row)
    summary = {
        "kind": cfg.kind,
        "groups": {" ".join(map(str, k)): v for k, v in groups.items()},
    }
    return rows, summary, {}


def experiment_encoding_sweep(cfg: ExperimentConfig):
    encodings = cfg.encodings or ("g1", "g2", "g3")
    combos = [
        {"encoding": enc, "d": d, "method": cfg.methods[0]}
        for enc in encodings for d in cfg.d
    ]
    return _sweep(cfg, combos, ("encoding", "d"))


def experiment_method_compare(cfg: ExperimentConfig):
    combos = [
        {"method": m, "d": d,
         "encoding": "g1" if m == "implicit" else "g2"}
        for m in cfg.methods for d in cfg.d
    ]
    return _sweep(cfg, combos, ("method", "d"))


def experiment_mos_generate(cfg: ExperimentConfig):
    d = cfg.d[0]
    ga = mos.GAConfig(
        population_size=cfg.mos_population,
        max_generations=cfg.mos_generations,
        weight_exponent=cfg.mos_weight_exponent,
        seed=cfg.seed,
    )
    best = mos.evolve(ga, d, cfg.mos_k)
    gram = mos.gram_matrix(best.states)
    rows = []
    for i in range(cfg.mos_k):
        for j in range(cfg.mos_k):
            rows.append({"i": i, "j": j, "overlap": float(gram[i, j])})
    off = gram[~np.eye(cfg.mos_k, dtype=bool)]
    summary = {
        "kind": cfg.kind,
        "d": d,
        "K": cfg.mos_k,
        "energy": -best.fitness,
        "max_offdiagonal_overlap": float(off.max()) if off.size else 0.0,
    }
    return rows, summary, {"mos_states": best.states}


def experiment_noise_sweep(cfg: ExperimentConfig):
    ds = load_dataset(cfg)
    xtr, ytr = ds.train
    xte, yte = ds.test
    d = cfg.d[0]
    if cfg.t2:
        grid = [float(t) for t in cfg.t2]
    else:
        grid = list(np.geomspace(cfg.t2_min, cfg.t2_max, cfg.t2_points))
    rabi = 2.0 * np.pi * cfg.rabi_hz
    spec = make_spec(encoding_for(cfg, "explicit"), d, ds.data_dim, cfg.layers, ds.n_classes)
    refs = make_centers(cfg, d, ds.n_classes)
    scaler = standardize(xtr)
    xtr_s, xte_s = scaler.apply(xtr), scaler.apply(xte)
    tc = TrainConfig(method="explicit", optimizer="spsa",
                     max_epochs=cfg.noise_epochs, seed=cfg.seed)
    rows = []
    groups = {}
    for t2 in grid:
        model = NoiseModel(t1=cfg.t1, t2=t2, rabi=rabi)
        t0 = time.perf_counter()
        records = run_chained(xtr_s, ytr, xte_s, yte, spec, model, refs, tc,
                              runs=cfg.noise_runs)
        elapsed = time.perf_counter() - t0
        for rec in records:
            rows.append({
                "t2": t2,
                "run": rec.run,
                "final_train_loss": rec.final_train_loss,
                "test_accuracy": rec.test_accuracy,
                "warm_started": rec.warm_started,
                "wall_time": elapsed / len(records),
            })
        accs = [rec.test_accuracy for rec in records]
        groups[f"{t2:.6e}"] = _summary_stats(accs)
    summary = {"kind": cfg.kind, "d": d, "t2_grid": [float(t) for t in grid],
               "groups": groups}
    return rows, summary, {}


def experiment_pca_sweep(cfg: ExperimentConfig):
    ds = load_dataset(cfg)
    xtr, ytr = ds.train
    xte, yte = ds.test
    d = cfg.d[0]
    dims = list(cfg.pca_dims) or [4, 6, 8, 12]
    rows = []
    groups = {}
    for dim in dims:
        pca = fit_pca(xtr, dim)
        xtr_p, xte_p = apply_pca(pca, xtr), apply_pca(pca, xte)
        spec = make_spec(encoding_for(cfg, "explicit"), d, dim, cfg.layers, ds.n_classes)
        tc = train_config_for(cfg, "explicit")
        refs = make_centers(cfg, d, ds.n_classes)
        results = run_restarts(xtr_p, ytr, xte_p, yte, spec, tc, refs,
                               cfg.restarts, cfg.jobs)
        fids = []
        for r in results:
            model = build_model(
                xtr_p, ytr, spec, tc,
                core.AnsatzParams.from_vector(spec, r["params_vec"]),
                refs=refs,
            )
            train_fid = mean_own_class_fidelity(model, xtr_p, ytr)
            test_fid = mean_own_class_fidelity(model, xte_p, yte)
            fids.append((train_fid, test_fid))
            rows.append({
                "pca_dim": dim,
                "restart": r["restart"],
                "final_loss": r["final_loss"],
                "train_fidelity": train_fid,
                "test_fidelity": test_fid,
                "test_accuracy": r["test_accuracy"],
            })
        best = int(np.argmin([r["final_loss"] for r in results]))
        groups[str(dim)] = {
            "best_train_fidelity": fids[best][0],
            "best_test_fidelity": fids[best][1],
            "median_train_fidelity": float(np.median([f[0] for f in fids])),
            "median_test_fidelity": float(np.median([f[1] for f in fids])),
        }
    summary = {"kind": cfg.kind, "d": d, "pca_dims": dims, "groups": groups}
    return rows, summary, {}


DISPATCH = {
    "train_eval": experiment_train_eval,
    "encoding_sweep": experiment_encoding_sweep,
    "method_compare": experiment_method_compare,
    "mos_generate": experiment_mos_generate,
    "noise_sweep": experiment_noise_sweep,
    "pca_sweep": experiment_pca_sweep,
}


def write_rows(path, rows):
    """Plain comma-separated rows with a header; floats via repr for
    byte-stable reruns."""
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Execute one experiment and write results.csv / summary.json."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows, summary, extras = DISPATCH[cfg.kind](cfg)
    elapsed = time.perf_counter() - t0
    summary = {
        "config": asdict(cfg),
        "version": __version__,
        "wall_time_seconds": elapsed,
        **summary,
    }
    write_rows(out / "results.csv", rows)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, default=_json_default)
        fh.write("\n")
    if "model" in extras:
        save_model(extras["model"], out / "model.txt")
    if "histories" in extras:
        write_rows(out / "histories.csv", extras["histories"])
    if "mos_states" in extras:
        mos.save_mos(extras["mos_states"], out / "mos.txt",
                     weight_exponent=cfg.mos_weight_exponent)
    return summary


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


# ---------------------------------------------------------------------------
# Bloch export
# ---------------------------------------------------------------------------


def bloch_coordinates(states) -> np.ndarray:
    """(x, y, z) expectation values for qubit states."""
    s = np.asarray(states, dtype=complex)
    if s.shape[-1] != 2:
        raise DimensionError("Bloch coordinates are defined for d = 2")
    a, b = s[..., 0], s[..., 1]
    x = 2.0 * (a.conj() * b).real
    y = 2.0 * (a.conj() * b).imag
    z = np.abs(a) ** 2 - np.abs(b) ** 2
    return np.stack([x, y, z], axis=-1)


def export_bloch(model, X, y, path, include_centers=True):
    """One row per data point: label, predicted class and the state coords.

    Qubits get Bloch x, y, z; higher dimensions get the raw amplitudes as
    (re, im) pairs. Centers are appended as rows flagged 'center'.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    states = model.encode_points(X)
    from .metric import classify

    pred = classify(model, X)
    d = states.shape[1]
    rows = []
    if d == 2:
        header = ["kind", "label", "predicted", "x", "y", "z"]
        coords = bloch_coordinates(states)
        for i in range(len(y)):
            rows.append(["point", int(y[i]), int(pred[i]),
                         *(repr(float(c)) for c in coords[i])])
        if include_centers and model.centers is not None:
            ccoords = bloch_coordinates(model.centers)
            for k in range(model.centers.shape[0]):
                rows.append(["center", k, k,
                             *(repr(float(c)) for c in ccoords[k])])
    else:
        header = ["kind", "label", "predicted"]
        for lvl in range(d):
            header += [f"re{lvl}", f"im{lvl}"]
        for i in range(len(y)):
            amp = []
            for lvl in range(d):
                amp += [repr(float(states[i, lvl].real)),
                        repr(float(states[i, lvl].imag))]
            rows.append(["point", int(y[i]), int(pred[i]), *amp])
        if include_centers and model.centers is not None:
            for k in range(model.centers.shape[0]):
                amp = []
                for lvl in range(d):
                    amp += [repr(float(model.centers[k, lvl].real)),
                            repr(float(model.centers[k, lvl].imag))]
                rows.append(["center", k, k, *amp])
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(rows)
