"""Iris encoding comparison: accuracy distributions for g1/g2/g3 over d.

Writes per-restart rows and a summary with per-(encoding, d) medians.
"""

import argparse
from pathlib import Path

from quditlearn.experiments import ExperimentConfig, run_experiment

REPO = Path(__file__).resolve().parents[1]

parser = argparse.ArgumentParser()
parser.add_argument("--d", type=int, nargs="+", default=[2, 3, 4, 5, 6])
parser.add_argument("--restarts", type=int, default=100)
parser.add_argument("--seed", type=int, default=4)
parser.add_argument("--jobs", type=int, default=2)
parser.add_argument("--out", default="results/iris_encoding_sweep")
args = parser.parse_args()

cfg = ExperimentConfig(
    kind="encoding_sweep",
    dataset="iris",
    data_path=str(REPO / "data" / "iris.csv"),
    d=tuple(args.d),
    encodings=("g1", "g2", "g3"),
    methods=("explicit",),
    restarts=args.restarts,
    seed=args.seed,
    jobs=args.jobs,
    out_dir=args.out,
)
summary = run_experiment(cfg)
for key, stats in summary["groups"].items():
    print(f"{key}: median {stats['median_accuracy']:.4f} "
          f"max {stats['max_accuracy']:.4f}")
