"""Implicit and explicit metric-learning losses, training and classification.

The implicit loss treats the encoded training points of each class as an
ensemble rho_k and rewards high ensemble purity plus low cross-class overlap:

    L_I = 1 - (1/K) sum_k tr(rho_k^2) + (2/K) sum_{k<l} tr(rho_k rho_l).

The explicit loss measures mean infidelity to one fixed reference state
(center) per class:

    L_E = 1 - (1/K) sum_k (1/N_k) sum_i |<center_k | psi(x_i)>|^2.

All ensemble traces reduce to pairwise pure-state overlaps, so everything is
computed from state vectors directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from .core import AnsatzParams, EncodingSpec, VirtualBasis
from .data import Standardizer, standardize
from .errors import DimensionError, EncodingError
from .optimize import OptimizeResult, adam_finite_difference, spsa


@dataclass
class ClassEnsemble:
    """Encoded training states of one class; rho_k is their uniform mixture."""

    class_id: int
    states: np.ndarray  # (N_k, d)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.ndim != 2 or self.states.shape[0] < 1:
            raise DimensionError("ensemble needs at least one state")

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass
class ReferenceSet:
    """One center state per class."""

    centers: np.ndarray  # (K, d)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=complex)
        if self.centers.ndim != 2 or self.centers.shape[0] < 2:
            raise DimensionError("need at least two centers")
        norms = np.linalg.norm(self.centers, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DimensionError("centers must be normalized")

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @staticmethod
    def orthonormal(d: int, k: int) -> "ReferenceSet":
        """The first k computational basis states; requires k <= d."""
        if k > d:
            raise DimensionError(
                f"cannot pick {k} orthonormal centers in dimension {d}"
            )
        return ReferenceSet(np.eye(d, dtype=complex)[:k])


def ensemble_purity_overlap(e1: ClassEnsemble, e2: ClassEnsemble) -> float:
    """tr(rho_1 rho_2) from pairwise squared overlaps of the member states."""
    if e1.dim != e2.dim:
        raise DimensionError("ensembles live in different dimensions")
    m = e1.states.conj() @ e2.states.T
    return float(np.mean(np.abs(m) ** 2))


def implicit_loss(ensembles) -> float:
    ensembles = list(ensembles)
    k = len(ensembles)
    if k < 2:
        raise DimensionError("implicit loss needs at least two classes")
    purity = sum(ensemble_purity_overlap(e, e) for e in ensembles)
    cross = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            cross += ensemble_purity_overlap(ensembles[i], ensembles[j])
    return 1.0 - purity / k + 2.0 * cross / k


def explicit_loss(ensembles, refs: ReferenceSet) -> float:
    ensembles = list(ensembles)
    if len(ensembles) != refs.size:
        raise DimensionError(
            f"{len(ensembles)} ensembles but {refs.size} centers"
        )
    total = 0.0
    for e in ensembles:
        c = refs.centers[e.class_id]
        total += float(np.mean(np.abs(e.states.conj() @ c) ** 2))
    return 1.0 - total / len(ensembles)


def ensembles_from_states(states, labels, k=None):
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    return [ClassEnsemble(c, np.asarray(states)[labels == c]) for c in range(k)]


@dataclass
class TrainConfig:
    method: str = "explicit"        # or "implicit"
    optimizer: str = "adam"         # finite-difference adam, or "spsa"
    restarts: int = 1
    max_epochs: int = 2500
    max_evals: int | None = None
    learning_rate: float = 0.05
    fd_step: float = 1e-5
    patience: int = 120
    min_improvement: float = 1e-9
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_big_a: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("implicit", "explicit"):
            raise EncodingError(f"unknown method {self.method!r}")
        if self.optimizer not in ("adam", "spsa"):
            raise EncodingError(f"unknown optimizer {self.optimizer!r}")
        if self.restarts < 1 or self.max_epochs < 1:
            raise EncodingError("restarts and max_epochs must be >= 1")
        if self.max_evals is not None and self.max_evals < 1:
            raise EncodingError("max_evals must be >= 1 when set")


class NoiselessObjective:
    """Loss over flat parameter vectors, batched across probe vectors."""

    def __init__(self, X, labels, spec: EncodingSpec, method,
                 refs: ReferenceSet | None = None,
                 basis: VirtualBasis | None = None):
        self.X = np.asarray(X, dtype=float)
        self.labels = np.asarray(labels)
        self.spec = spec
        self.method = method
        self.refs = refs
        self.basis = basis
        self.k = int(self.labels.max()) + 1
        if method == "explicit":
            if refs is None:
                raise EncodingError("explicit method requires a reference set")
            if refs.size != self.k:
                raise DimensionError(
                    f"{self.k} classes but {refs.size} centers"
                )
        self.class_idx = [np.flatnonzero(self.labels == c) for c in range(self.k)]
        if any(idx.size == 0 for idx in self.class_idx):
            raise DimensionError("every class needs at least one training point")
        counts = np.array([idx.size for idx in self.class_idx], dtype=float)
        self._indicator = np.zeros((self.k, self.labels.size))
        self._indicator[self.labels, np.arange(self.labels.size)] = 1.0
        self._pair_counts = np.outer(counts, counts)

    def states(self, vecs) -> np.ndarray:
        angles = core.encode_vectors(self.X, self.spec, vecs)
        return core.evolve_angles(angles, self.spec, self.basis)

    def loss_batch(self, vecs) -> np.ndarray:
        vecs = np.atleast_2d(vecs)
        states = self.states(vecs)  # (M, N, d)
        if self.method == "explicit":
            fid = np.abs(states @ self.refs.centers.conj().T) ** 2  # (M, N, K)
            own = fid[:, np.arange(states.shape[1]), self.labels]
            per_class = [own[:, idx].mean(axis=1) for idx in self.class_idx]
            return 1.0 - np.mean(per_class, axis=0)
        # implicit: tr(rho_c rho_c') from the full squared-overlap gram,
        # reduced per class pair with the indicator matrix
        gram = np.abs(states @ np.conj(np.swapaxes(states, -1, -2))) ** 2
        block = self._indicator @ gram @ self._indicator.T  # (M, K, K)
        overlaps = block / self._pair_counts
        tr = np.trace(overlaps, axis1=-2, axis2=-1)
        total = overlaps.sum(axis=(-2, -1))
        return 1.0 + (total - 2.0 * tr) / self.k

    def loss(self, vec) -> float:
        return float(self.loss_batch(np.asarray(vec)[None, :])[0])


@dataclass
class TrainedModel:
    spec: EncodingSpec
    params: AnsatzParams
    method: str
    scaler: Standardizer
    centers: np.ndarray | None = None       # (K, d) for the explicit method
    train_states: np.ndarray | None = None  # encoded training points (implicit)
    train_labels: np.ndarray | None = None
    basis: VirtualBasis | None = None
    seed: int = 0

    @property
    def n_classes(self) -> int:
        if self.centers is not None:
            return self.centers.shape[0]
        return int(np.max(self.train_labels)) + 1

    def encode_points(self, X) -> np.ndarray:
        xs = self.scaler.apply(X)
        return core.build_states(xs, self.spec, self.params, self.basis)


@dataclass
class RestartResult:
    restart: int
    params: AnsatzParams
    final_loss: float
    history: list
    n_evals: int
    converged: bool


@dataclass
class TrainResult:
    model: TrainedModel
    restarts: list
    best_index: int


def _restart_rng(seed, restart):
    return np.random.default_rng([int(seed), int(restart)])


def _run_single_restart(objective, spec, config, restart) -> RestartResult:
    rng = _restart_rng(config.seed, restart)
    x0 = AnsatzParams.random(spec, rng).to_vector()
    if config.optimizer == "adam":
        res: OptimizeResult = adam_finite_difference(
            objective.loss_batch,
            x0,
            learning_rate=config.learning_rate,
            fd_step=config.fd_step,
            max_epochs=config.max_epochs,
            patience=config.patience,
            min_improvement=config.min_improvement,
            max_evals=config.max_evals,
        )
    else:
        res = spsa(
            objective.loss_batch,
            x0,
            rng,
            a=config.spsa_a,
            c=config.spsa_c,
            big_a=config.spsa_big_a,
            epochs=config.max_epochs,
            max_evals=config.max_evals,
        )
    return RestartResult(
        restart=restart,
        params=AnsatzParams.from_vector(spec, res.x),
        final_loss=res.loss,
        history=res.history,
        n_evals=res.n_evals,
        converged=res.converged,
    )


def train(features, labels, spec: EncodingSpec, config: TrainConfig,
          refs: ReferenceSet | None = None,
          basis: VirtualBasis | None = None) -> TrainResult:
    """Fit the ansatz parameters on a training split.

    Features are standardized with training statistics before encoding. Runs
    `config.restarts` independent restarts (seeded from config.seed and the
    restart index) and returns the model of the best final loss together with
    every restart record.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.shape[0] == 0:
        raise DimensionError("training split is empty")
    scaler = standardize(features)
    xs = scaler.apply(features)
    objective = NoiselessObjective(xs, labels, spec, config.method, refs, basis)
    restarts = [
        _run_single_restart(objective, spec, config, r)
        for r in range(config.restarts)
    ]
    best = int(np.argmin([r.final_loss for r in restarts]))
    model = build_model(features, labels, spec, config, restarts[best].params,
                        refs=refs, basis=basis, scaler=scaler)
    return TrainResult(model=model, restarts=restarts, best_index=best)


def build_model(features, labels, spec, config, params,
                refs=None, basis=None, scaler=None) -> TrainedModel:
    scaler = standardize(features) if scaler is None else scaler
    model = TrainedModel(
        spec=spec,
        params=params,
        method=config.method,
        scaler=scaler,
        centers=None if refs is None else refs.centers,
        basis=basis,
        seed=config.seed,
    )
    if config.method == "implicit":
        model.train_states = core.build_states(
            scaler.apply(features), spec, params, basis
        )
        model.train_labels = np.asarray(labels)
    return model


def classify(model: TrainedModel, X) -> np.ndarray:
    """Predicted class per row of X.

    Explicit: the center with the largest fidelity to the encoded point.
    Implicit: the class whose training ensemble has the largest mean squared
    overlap with the encoded point. Ties go to the lowest class index.
    """
    states = model.encode_points(np.atleast_2d(X))
    if model.method == "explicit":
        if model.centers is None:
            raise EncodingError("model has no centers; was it trained?")
        scores = np.abs(states @ np.asarray(model.centers).conj().T) ** 2
    else:
        if model.train_states is None:
            raise EncodingError("implicit model is missing its training states")
        overlap = np.abs(states @ model.train_states.conj().T) ** 2  # (N, N_train)
        k = model.n_classes
        scores = np.stack(
            [overlap[:, model.train_labels == c].mean(axis=1) for c in range(k)],
            axis=1,
        )
    return np.argmax(scores, axis=1)


def test_accuracy(model: TrainedModel, X, y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise DimensionError("test split is empty")
    pred = classify(model, X)
    return float(np.mean(pred == y))


# ---------------------------------------------------------------------------
# model serialization: versioned plain-text document
# ---------------------------------------------------------------------------

MODEL_FORMAT = "quditlearn-model v1"


def _write_array(fh, tag, arr):
    arr = np.asarray(arr)
    fh.write(f"{tag} shape={','.join(map(str, arr.shape))}\n")
    flat = arr.ravel()
    if np.iscomplexobj(arr):
        for v in flat:
            fh.write(f"{float(v.real)!r} {float(v.imag)!r}\n")
    else:
        for v in flat:
            fh.write(f"{float(v)!r}\n")


def _read_array(lines, i, tag, complex_=False):
    head = lines[i].split()
    if head[0] != tag:
        raise EncodingError(f"model file: expected {tag!r}, found {lines[i]!r}")
    shape = tuple(int(s) for s in head[1].split("=")[1].split(",") if s)
    count = int(np.prod(shape)) if shape else 1
    vals = []
    for j in range(count):
        parts = lines[i + 1 + j].split()
        if complex_:
            vals.append(complex(float(parts[0]), float(parts[1])))
        else:
            vals.append(float(parts[0]))
    dtype = complex if complex_ else float
    return np.asarray(vals, dtype=dtype).reshape(shape), i + 1 + count


def save_model(model: TrainedModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MODEL_FORMAT + "\n")
        fh.write(f"d = {model.spec.dim}\n")
        fh.write(f"layers = {model.spec.layers}\n")
        fh.write(f"encoding = {model.spec.variant}\n")
        fh.write(f"data_dim = {model.spec.data_dim}\n")
        if model.spec.init_levels is not None:
            fh.write(f"init_levels = {model.spec.init_levels}\n")
        fh.write(f"method = {model.method}\n")
        fh.write(f"seed = {model.seed}\n")
        _write_array(fh, "weights", model.params.weights)
        _write_array(fh, "biases", model.params.biases)
        _write_array(fh, "scaler_mean", model.scaler.mean)
        _write_array(fh, "scaler_scale", model.scaler.scale)
        if model.centers is not None:
            _write_array(fh, "centers", model.centers)


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MODEL_FORMAT:
        raise EncodingError(f"{path}: not a {MODEL_FORMAT} document")
    fields = {}
    i = 1
    while i < len(lines) and "=" in lines[i] and not lines[i].startswith(
        ("weights", "biases", "scaler", "centers")
    ):
        key, val = (s.strip() for s in lines[i].split("=", 1))
        fields[key] = val
        i += 1
    spec = EncodingSpec(
        variant=fields["encoding"],
        dim=int(fields["d"]),
        data_dim=int(fields["data_dim"]),
        layers=int(fields["layers"]),
        init_levels=int(fields["init_levels"]) if "init_levels" in fields else None,
    )
    weights, i = _read_array(lines, i, "weights")
    biases, i = _read_array(lines, i, "biases")
    mean, i = _read_array(lines, i, "scaler_mean")
    scale, i = _read_array(lines, i, "scaler_scale")
    centers = None
    if i < len(lines) and lines[i].startswith("centers"):
        centers, i = _read_array(lines, i, "centers", complex_=True)
    return TrainedModel(
        spec=spec,
        params=AnsatzParams(weights, biases),
        method=fields["method"],
        scaler=Standardizer(mean, scale),
        centers=centers,
        seed=int(fields["seed"]),
    )
