"""Noisy Iris study: chained SPSA runs over a logarithmic T2 grid.

Generates the qubit trine centers first when three classes must fit on two
levels, then sweeps T2 and records one row per (T2, run).
"""

import argparse
from pathlib import Path

from quditlearn import mos
from quditlearn.experiments import ExperimentConfig, run_experiment

REPO = Path(__file__).resolve().parents[1]

parser = argparse.ArgumentParser()
parser.add_argument("--d", type=int, default=2)
parser.add_argument("--layers", type=int, default=1)
parser.add_argument("--t2-min", type=float, default=1e-7)
parser.add_argument("--t2-max", type=float, default=1e-4)
parser.add_argument("--t2-points", type=int, default=12)
parser.add_argument("--runs", type=int, default=50)
parser.add_argument("--seed", type=int, default=1)
parser.add_argument("--out", default="results/iris_noise_sweep")
args = parser.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

center_source = "orthonormal"
mos_file = ""
if args.d < 3:
    mos_file = str(out / f"mos_d{args.d}_k3.txt")
    best = mos.evolve(mos.GAConfig(seed=0), args.d, 3)
    mos.save_mos(best.states, mos_file)
    center_source = "mos_file"

cfg = ExperimentConfig(
    kind="noise_sweep",
    dataset="iris",
    data_path=str(REPO / "data" / "iris.csv"),
    d=(args.d,),
    layers=args.layers,
    encodings=("g2",),
    center_source=center_source,
    mos_file=mos_file,
    t2_min=args.t2_min,
    t2_max=args.t2_max,
    t2_points=args.t2_points,
    noise_runs=args.runs,
    seed=args.seed,
    out_dir=str(out),
)
summary = run_experiment(cfg)
for t2, stats in summary["groups"].items():
    print(f"T2={t2}: median {stats['median_accuracy']:.4f} "
          f"max {stats['max_accuracy']:.4f}")
