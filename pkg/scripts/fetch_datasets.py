"""Materialize the bundled CSV datasets from scikit-learn's copies.

Writes data/iris.csv, data/wdbc.csv and data/digits8x8.csv next to the repo
root. Only needed when regenerating the bundled files; scikit-learn is not a
runtime dependency of the package.
"""

from pathlib import Path

from sklearn.datasets import load_breast_cancer, load_digits, load_iris

OUT = Path(__file__).resolve().parents[1] / "data"


def write_iris():
    ds = load_iris()
    lines = []
    for row, target in zip(ds.data, ds.target):
        feats = ",".join(f"{v:.1f}" for v in row)
        lines.append(f"{feats},Iris-{ds.target_names[target]}")
    (OUT / "iris.csv").write_text("\n".join(lines) + "\n")
    print(f"iris.csv: {len(lines)} rows")


def write_wdbc():
    ds = load_breast_cancer()
    # sklearn target 0 = malignant, 1 = benign; file uses the M/B diagnosis
    diag = {0: "M", 1: "B"}
    lines = []
    for i, (row, target) in enumerate(zip(ds.data, ds.target)):
        feats = ",".join(repr(float(v)) for v in row)
        lines.append(f"{842000 + i},{diag[target]},{feats}")
    (OUT / "wdbc.csv").write_text("\n".join(lines) + "\n")
    print(f"wdbc.csv: {len(lines)} rows")


def write_digits():
    ds = load_digits()
    lines = []
    for row, target in zip(ds.data, ds.target):
        feats = ",".join(str(int(v)) for v in row)
        lines.append(f"{feats},{target}")
    (OUT / "digits8x8.csv").write_text("\n".join(lines) + "\n")
    print(f"digits8x8.csv: {len(lines)} rows")


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    write_iris()
    write_wdbc()
    write_digits()
