"""Dataset ingestion, stratified splits, standardization and PCA."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

TRAIN, VALIDATION, TEST = "train", "validation", "test"

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Feature matrix plus labels, class names and a row-to-split assignment."""

    features: np.ndarray  # (N, D_x)
    labels: np.ndarray    # (N,) ints in [0, K)
    names: list
    split: np.ndarray     # (N,) strings from {train, validation, test}

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.split.shape != (n,):
            raise DataError("features, labels and split must have matching length")
        k = len(self.names)
        if self.labels.min() < 0 or self.labels.max() >= k:
            raise DataError("labels out of range")

    @property
    def n_classes(self) -> int:
        return len(self.names)

    @property
    def data_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, which: str):
        mask = self.split == which
        return self.features[mask], self.labels[mask]

    @property
    def train(self):
        return self.subset(TRAIN)

    @property
    def validation(self):
        return self.subset(VALIDATION)

    @property
    def test(self):
        return self.subset(TEST)


def _read_rows(path, n_columns=None):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if n_columns is not None and len(parts) != n_columns:
                raise DataError(
                    f"{path}: line {lineno}: expected {n_columns} fields, got {len(parts)}"
                )
            rows.append((lineno, parts))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _parse_float(path, lineno, token):
    try:
        return float(token)
    except ValueError as exc:
        raise DataError(f"{path}: line {lineno}: bad numeric field {token!r}") from exc


def _stratified_counts(labels, total, k):
    """Largest-remainder allocation of `total` rows across classes."""
    counts = np.bincount(labels, minlength=k)
    exact = counts * (total / counts.sum())
    alloc = np.floor(exact).astype(int)
    rem = exact - alloc
    for i in np.argsort(-rem)[: total - alloc.sum()]:
        alloc[i] += 1
    if np.any(alloc > counts):
        raise DataError("stratified split request exceeds class size")
    return alloc


def _assign_split(labels, train_per_class, rng, k, validation_fraction=0.0,
                  test_per_class=None):
    n = labels.shape[0]
    split = np.full(n, TEST, dtype=object)
    for cls in range(k):
        idx = np.flatnonzero(labels == cls)
        want = train_per_class[cls] if np.ndim(train_per_class) else train_per_class
        if want > idx.size:
            raise DataError(
                f"class {cls} has {idx.size} rows, cannot take {want} for training"
            )
        perm = rng.permutation(idx)
        train_idx = perm[:want]
        if validation_fraction > 0.0:
            n_val = int(round(want * validation_fraction))
            split[train_idx[: want - n_val]] = TRAIN
            split[train_idx[want - n_val:]] = VALIDATION
        else:
            split[train_idx] = TRAIN
        if test_per_class is not None:
            rest = perm[want:]
            if test_per_class > rest.size:
                raise DataError(
                    f"class {cls} has {rest.size} rows left, cannot take "
                    f"{test_per_class} for testing"
                )
            drop = rest[test_per_class:]
            split[drop] = "unused"
    return np.asarray(split, dtype=object)


# The canonical iris column order is (sepal length, sepal width, petal
# length, petal width); the loader emits (petal length, sepal length, petal
# width, sepal width) so the even feature slots carry the petal measurements.
IRIS_FEATURE_ORDER = (2, 0, 3, 1)


def load_iris(path, seed=0, train_per_class=10) -> Dataset:
    """Iris CSV: four numeric features and a species label per row.

    Features are reordered per IRIS_FEATURE_ORDER. Stratified split with
    `train_per_class` rows per species in the training set and everything
    else in the test set; the shuffle is seeded.
    """
    rows = _read_rows(path, n_columns=5)
    feats, raw_labels = [], []
    for lineno, parts in rows:
        vals = [_parse_float(path, lineno, p) for p in parts[:4]]
        feats.append([vals[i] for i in IRIS_FEATURE_ORDER])
        raw_labels.append(parts[4])
    names = sorted(set(raw_labels))
    name_to_idx = {n: i for i, n in enumerate(names)}
    labels = np.array([name_to_idx[r] for r in raw_labels])
    features = np.asarray(feats, dtype=float)
    rng = np.random.default_rng([int(seed), 0x1121])
    split = _assign_split(labels, train_per_class, rng, len(names))
    return Dataset(features, labels, names, split)


def load_breast_cancer(path, seed=0, feature_columns="mean", train_size=113) -> Dataset:
    """Wisconsin diagnostic CSV: id, diagnosis (M/B), then numeric features.

    feature_columns selects which feature columns to keep: "mean" takes the
    first 10 (the per-cell mean statistics), "all" keeps every numeric column,
    or pass an explicit list of zero-based feature indices.
    """
    rows = _read_rows(path)
    feats, raw_labels = [], []
    width = None
    for lineno, parts in rows:
        if len(parts) < 3:
            raise DataError(f"{path}: line {lineno}: too few fields")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise DataError(
                f"{path}: line {lineno}: expected {width} fields, got {len(parts)}"
            )
        raw_labels.append(parts[1])
        feats.append([_parse_float(path, lineno, p) for p in parts[2:]])
    features = np.asarray(feats, dtype=float)
    if feature_columns == "mean":
        cols = list(range(min(10, features.shape[1])))
    elif feature_columns == "all":
        cols = list(range(features.shape[1]))
    else:
        cols = list(feature_columns)
    features = features[:, cols]
    names = sorted(set(raw_labels))
    name_to_idx = {n: i for i, n in enumerate(names)}
    labels = np.array([name_to_idx[r] for r in raw_labels])
    rng = np.random.default_rng([int(seed), 0x1122])
    per_class = _stratified_counts(labels, train_size, len(names))
    split = _assign_split(labels, per_class, rng, len(names))
    return Dataset(features, labels, names, split)


def _read_u32_be(fh, path):
    data = fh.read(4)
    if len(data) != 4:
        raise DataError(f"{path}: truncated header")
    return struct.unpack(">I", data)[0]


def _open_maybe_gzip(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx_images(path) -> np.ndarray:
    """Big-endian IDX image file -> (N, rows*cols) floats scaled to [0, 1]."""
    with _open_maybe_gzip(path) as fh:
        magic = _read_u32_be(fh, path)
        if magic != IDX_IMAGE_MAGIC:
            raise DataError(f"{path}: bad magic 0x{magic:08x} for IDX image file")
        count = _read_u32_be(fh, path)
        rows = _read_u32_be(fh, path)
        cols = _read_u32_be(fh, path)
        buf = fh.read(count * rows * cols)
        if len(buf) != count * rows * cols:
            raise DataError(f"{path}: truncated image data")
        pixels = np.frombuffer(buf, dtype=np.uint8).reshape(count, rows * cols)
    return pixels.astype(float) / 255.0


def read_idx_labels(path) -> np.ndarray:
    with _open_maybe_gzip(path) as fh:
        magic = _read_u32_be(fh, path)
        if magic != IDX_LABEL_MAGIC:
            raise DataError(f"{path}: bad magic 0x{magic:08x} for IDX label file")
        count = _read_u32_be(fh, path)
        buf = fh.read(count)
        if len(buf) != count:
            raise DataError(f"{path}: truncated label data")
    return np.frombuffer(buf, dtype=np.uint8).astype(int)


MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def _find_idx(directory: Path, stem: str) -> Path:
    for cand in (directory / stem, directory / (stem + ".gz")):
        if cand.exists():
            return cand
    raise DataError(f"missing IDX file {stem}(.gz) under {directory}")


def load_digits(path, variant, digits=None, per_class_counts=None, seed=0) -> Dataset:
    """Handwritten digit images as flattened pixel features in [0, 1].

    variant "mnist_idx": `path` is a directory with the four standard IDX
    files; per_class_counts defaults to (300, 600) images per digit for
    train/test, and the training rows are further split 80/20 into train and
    validation. variant "digits8x8": `path` is a CSV with 64 pixel columns
    (0..16) plus the digit label; per_class_counts defaults to (100, None)
    where None means "all remaining rows".
    """
    if digits is None:
        digits = list(range(10))
    digits = sorted(set(int(d) for d in digits))
    if len(digits) < 2:
        raise DataError("need at least two digit classes")

    if variant == "mnist_idx":
        if per_class_counts is None:
            per_class_counts = (300, 600)
        train_pc, test_pc = per_class_counts
        directory = Path(path)
        xs, ys, split = [], [], []
        rng = np.random.default_rng([int(seed), 0x1123])
        tr_x = read_idx_images(_find_idx(directory, MNIST_FILES["train_images"]))
        tr_y = read_idx_labels(_find_idx(directory, MNIST_FILES["train_labels"]))
        te_x = read_idx_images(_find_idx(directory, MNIST_FILES["test_images"]))
        te_y = read_idx_labels(_find_idx(directory, MNIST_FILES["test_labels"]))
        if tr_x.shape[0] != tr_y.shape[0] or te_x.shape[0] != te_y.shape[0]:
            raise DataError("image/label counts disagree")
        for new_label, digit in enumerate(digits):
            idx = rng.permutation(np.flatnonzero(tr_y == digit))
            if idx.size < train_pc:
                raise DataError(f"digit {digit}: only {idx.size} training images")
            take = idx[:train_pc]
            n_val = int(round(train_pc * 0.2))
            xs.append(tr_x[take])
            ys.extend([new_label] * train_pc)
            split.extend([TRAIN] * (train_pc - n_val) + [VALIDATION] * n_val)
            idx = rng.permutation(np.flatnonzero(te_y == digit))
            if test_pc is not None and idx.size < test_pc:
                raise DataError(f"digit {digit}: only {idx.size} test images")
            take = idx[:test_pc] if test_pc is not None else idx
            xs.append(te_x[take])
            ys.extend([new_label] * take.size)
            split.extend([TEST] * take.size)
        features = np.concatenate(xs, axis=0)
        labels = np.asarray(ys)
        split = np.asarray(split, dtype=object)
        names = [str(d) for d in digits]
        return Dataset(features, labels, names, split)

    if variant == "digits8x8":
        if per_class_counts is None:
            per_class_counts = (100, None)
        train_pc, test_pc = per_class_counts
        rows = _read_rows(path, n_columns=65)
        feats, raw = [], []
        for lineno, parts in rows:
            feats.append([_parse_float(path, lineno, p) for p in parts[:64]])
            raw.append(int(_parse_float(path, lineno, parts[64])))
        features = np.asarray(feats, dtype=float) / 16.0
        raw = np.asarray(raw)
        keep = np.isin(raw, digits)
        features = features[keep]
        raw = raw[keep]
        relabel = {d: i for i, d in enumerate(digits)}
        labels = np.array([relabel[r] for r in raw])
        rng = np.random.default_rng([int(seed), 0x1123])
        split = _assign_split(labels, train_pc, rng, len(digits),
                              test_per_class=test_pc)
        names = [str(d) for d in digits]
        mask = split != "unused"
        return Dataset(features[mask], labels[mask], names,
                       np.asarray(split[mask], dtype=object))

    raise DataError(f"unknown digits variant {variant!r}")


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def standardize(train_features) -> Standardizer:
    """Zero-mean unit-variance transform fit on the training split only.

    Constant columns keep scale 1 so they pass through mean-centered.
    """
    X = np.asarray(train_features, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Standardizer(mean, std)


@dataclass
class PCAModel:
    """Orthonormal principal directions of the training covariance."""

    mean: np.ndarray
    components: np.ndarray          # (target_dim, D_x), rows orthonormal
    explained_variance: np.ndarray  # non-increasing

    @property
    def target_dim(self) -> int:
        return self.components.shape[0]


def fit_pca(train_features, target_dim) -> PCAModel:
    X = np.asarray(train_features, dtype=float)
    n, d = X.shape
    if target_dim > min(n, d) or target_dim < 1:
        raise DataError(
            f"target_dim {target_dim} not in [1, min(N={n}, D={d})]"
        )
    mean = X.mean(axis=0)
    xc = X - mean
    cov = xc.T @ xc / max(n - 1, 1)
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1][:target_dim]
    comps = v[:, order].T.copy()
    # fix the sign gauge so serialized models are reproducible
    for row in comps:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1.0
    return PCAModel(mean, comps, w[order].copy())


def apply_pca(model: PCAModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    return (X - model.mean) @ model.components.T
