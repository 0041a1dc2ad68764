"""Qutrit on the 8x8 digits: fidelity as a function of the PCA dimension."""

import argparse
from pathlib import Path

from quditlearn import mos
from quditlearn.experiments import ExperimentConfig, run_experiment

REPO = Path(__file__).resolve().parents[1]

parser = argparse.ArgumentParser()
parser.add_argument("--d", type=int, default=3)
parser.add_argument("--digits", type=int, nargs="+", default=[0, 1, 2, 3, 4])
parser.add_argument("--dims", type=int, nargs="+", default=[4, 6, 8, 12])
parser.add_argument("--restarts", type=int, default=4)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--jobs", type=int, default=2)
parser.add_argument("--out", default="results/digits_pca_sweep")
args = parser.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

center_source = "orthonormal"
mos_file = ""
if len(args.digits) > args.d:
    mos_file = str(out / f"mos_d{args.d}_k{len(args.digits)}.txt")
    best = mos.evolve(mos.GAConfig(seed=0), args.d, len(args.digits))
    mos.save_mos(best.states, mos_file)
    center_source = "mos_file"

cfg = ExperimentConfig(
    kind="pca_sweep",
    dataset="digits8x8",
    data_path=str(REPO / "data" / "digits8x8.csv"),
    digits=tuple(args.digits),
    train_per_class=100,
    d=(args.d,),
    encodings=("g2",),
    center_source=center_source,
    mos_file=mos_file,
    pca_dims=tuple(args.dims),
    restarts=args.restarts,
    seed=args.seed,
    jobs=args.jobs,
    out_dir=str(out),
)
summary = run_experiment(cfg)
for dim, stats in summary["groups"].items():
    print(f"dim={dim}: train fid {stats['best_train_fidelity']:.3f} "
          f"test fid {stats['best_test_fidelity']:.3f}")
