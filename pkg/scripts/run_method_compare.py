"""Implicit vs explicit metric learning on Iris or the breast-cancer set."""

import argparse
from pathlib import Path

from quditlearn.experiments import ExperimentConfig, run_experiment

REPO = Path(__file__).resolve().parents[1]
PATHS = {"iris": "iris.csv", "wdbc": "wdbc.csv"}

parser = argparse.ArgumentParser()
parser.add_argument("--dataset", choices=["iris", "wdbc"], default="iris")
parser.add_argument("--d", type=int, nargs="+", default=[2, 3, 4, 5, 6])
parser.add_argument("--restarts", type=int, default=100)
parser.add_argument("--seed", type=int, default=4)
parser.add_argument("--jobs", type=int, default=2)
parser.add_argument("--out", default=None)
args = parser.parse_args()

cfg = ExperimentConfig(
    kind="method_compare",
    dataset=args.dataset,
    data_path=str(REPO / "data" / PATHS[args.dataset]),
    d=tuple(args.d),
    methods=("implicit", "explicit"),
    restarts=args.restarts,
    seed=args.seed,
    jobs=args.jobs,
    out_dir=args.out or f"results/{args.dataset}_method_compare",
)
summary = run_experiment(cfg)
for key, stats in summary["groups"].items():
    print(f"{key}: median {stats['median_accuracy']:.4f} "
          f"max {stats['max_accuracy']:.4f}")
