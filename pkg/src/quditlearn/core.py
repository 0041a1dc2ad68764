"""Qudit states, two-level rotations and the data-dependent ansatz.

A qudit state is a length-d complex vector with unit norm. The elementary
control operation is a rotation between two levels k < l,

    R_{k,l}(theta, phi) = exp(-i theta/2 * G_{k,l}(phi)),

whose generator couples only the (k, l) subspace:

    G_{k,l}(phi) = cos(phi) (|k><l| + |l><k|) - sin(phi) (i|k><l| - i|l><k|)
                 = e^{-i phi} |k><l| + e^{i phi} |l><k|.

Everything else in the package (training, noisy pulse simulation, reference
state synthesis) is built from sequences of these rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EncodingError

ENCODING_VARIANTS = ("g1", "g2", "g3")


def ground_state(d: int) -> np.ndarray:
    """|0> in dimension d."""
    if d < 2:
        raise DimensionError(f"qudit dimension must be >= 2, got {d}")
    psi = np.zeros(d, dtype=complex)
    psi[0] = 1.0
    return psi


def plus_state(d: int) -> np.ndarray:
    """Uniform superposition (1/sqrt(d)) sum_l |l>."""
    if d < 2:
        raise DimensionError(f"qudit dimension must be >= 2, got {d}")
    return np.full(d, 1.0 / math.sqrt(d), dtype=complex)


def norm_error(state) -> float:
    """|  ||psi||^2 - 1 |, used by the normalization invariants."""
    return abs(float(np.vdot(state, state).real) - 1.0)


@dataclass(frozen=True)
class Rotation:
    """Two-level rotation R_{k,l}(theta, phi) with k < l."""

    k: int
    l: int
    theta: float
    phi: float

    def __post_init__(self):
        if not (0 <= self.k < self.l):
            raise DimensionError(f"need 0 <= k < l, got k={self.k}, l={self.l}")

    def inverse(self) -> "Rotation":
        return Rotation(self.k, self.l, -self.theta, self.phi)


def rotation_matrix(d: int, rot: Rotation) -> np.ndarray:
    """Full d x d matrix of a two-level rotation.

    The generator squares to the identity on its 2x2 block, so the
    exponential is cos/sin in closed form.
    """
    if rot.l >= d:
        raise DimensionError(f"level {rot.l} out of range for dimension {d}")
    c = math.cos(rot.theta / 2.0)
    s = math.sin(rot.theta / 2.0)
    u = np.eye(d, dtype=complex)
    u[rot.k, rot.k] = c
    u[rot.l, rot.l] = c
    u[rot.k, rot.l] = -1j * s * np.exp(-1j * rot.phi)
    u[rot.l, rot.k] = -1j * s * np.exp(1j * rot.phi)
    return u


def apply_rotation(state, rot: Rotation) -> np.ndarray:
    """Apply R_{k,l}(theta, phi) to a state vector.

    Only the k and l amplitudes change; the norm is preserved exactly up to
    floating point.
    """
    psi = np.asarray(state, dtype=complex)
    if rot.l >= psi.shape[-1]:
        raise DimensionError(
            f"level {rot.l} out of range for dimension {psi.shape[-1]}"
        )
    c = math.cos(rot.theta / 2.0)
    s = math.sin(rot.theta / 2.0)
    ep = np.exp(1j * rot.phi)
    out = psi.copy()
    ak = psi[..., rot.k]
    al = psi[..., rot.l]
    out[..., rot.k] = c * ak - 1j * s * np.conj(ep) * al
    out[..., rot.l] = -1j * s * ep * ak + c * al
    return out


def fidelity(a, b) -> float:
    """|<a|b>|^2 for two pure states."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"state dimensions differ: {a.shape} vs {b.shape}")
    return float(np.abs(np.vdot(a, b)) ** 2)


@dataclass(frozen=True)
class VirtualBasis:
    """K normalized states used as rotation endpoints instead of |k>, |l>.

    The rotation generators become
    tau_{k,l}(phi) = e^{-i phi} |phi_k><phi_l| + h.c., which reduces to the
    ladder generator when the members are computational basis states.
    """

    states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise DimensionError("virtual basis needs at least two states")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise DimensionError("virtual basis states must be normalized")
        object.__setattr__(self, "states", arr)

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def generator(self, k: int, l: int, phi: float) -> np.ndarray:
        a = np.outer(self.states[k], self.states[l].conj())
        g = np.exp(-1j * phi) * a
        return g + g.conj().T


@dataclass(frozen=True)
class EncodingSpec:
    """Layout of the encoding map g: (x, params) -> rotation angles.

    variant  g1: x'_i = w_i x_i + b_i, circuit starts from |0>
             g2: same transform, circuit starts from the uniform superposition
             g3: x' = W x + b with W of shape (2*(n-1), D_x), |+> start
    dim      qudit dimension d
    data_dim feature dimension D_x
    layers   number of re-uploading layers, each with its own parameters
    n_anchors number of rotation endpoints; defaults to dim (ladder between
             adjacent levels), set to K when rotating between K virtual states
    init_levels for g2/g3, how many of the lowest levels the uniform
             superposition spans; defaults to dim. Classification problems
             with fewer classes than levels start in the class subspace,
             which keeps the single-sublayer ladder able to reach the
             centers regardless of d.
    """

    variant: str
    dim: int
    data_dim: int
    layers: int = 1
    n_anchors: int | None = None
    init_levels: int | None = None

    def __post_init__(self):
        if self.variant not in ENCODING_VARIANTS:
            raise EncodingError(f"unknown encoding variant {self.variant!r}")
        if self.dim < 2:
            raise DimensionError(f"qudit dimension must be >= 2, got {self.dim}")
        if self.data_dim < 1:
            raise EncodingError("data dimension must be positive")
        if self.layers < 1:
            raise EncodingError("need at least one layer")
        if self.n_anchors is not None and self.n_anchors < 2:
            raise EncodingError("need at least two rotation endpoints")
        if self.init_levels is not None and not (
            2 <= self.init_levels <= self.dim
        ):
            raise EncodingError("init_levels must lie in [2, dim]")

    @property
    def anchors(self) -> int:
        return self.dim if self.n_anchors is None else self.n_anchors

    @property
    def transitions(self) -> int:
        return self.anchors - 1

    @property
    def angles_per_sublayer(self) -> int:
        return 2 * self.transitions

    @property
    def padded_dim(self) -> int:
        # g3 maps everything into a single sublayer by construction
        if self.variant == "g3":
            return self.angles_per_sublayer
        a = self.angles_per_sublayer
        return ((self.data_dim + a - 1) // a) * a

    @property
    def sublayers_per_layer(self) -> int:
        return self.padded_dim // self.angles_per_sublayer

    @property
    def initial_state_kind(self) -> str:
        return "ground" if self.variant == "g1" else "plus"

    def initial_state(self) -> np.ndarray:
        if self.variant == "g1":
            return ground_state(self.dim)
        span = self.dim if self.init_levels is None else self.init_levels
        psi = np.zeros(self.dim, dtype=complex)
        psi[:span] = 1.0 / math.sqrt(span)
        return psi

    @property
    def params_per_layer(self) -> int:
        if self.variant == "g3":
            return self.angles_per_sublayer * (self.data_dim + 1)
        return 2 * self.data_dim

    @property
    def n_params(self) -> int:
        return self.layers * self.params_per_layer


@dataclass(frozen=True)
class AnsatzParams:
    """Trainable weights and biases, one set per layer.

    g1/g2: weights and biases both (layers, data_dim); the weight matrix is
    diagonal and only its diagonal is stored.
    g3: weights (layers, 2*(n-1), data_dim), biases (layers, 2*(n-1)).
    """

    weights: np.ndarray
    biases: np.ndarray

    @staticmethod
    def random(spec: EncodingSpec, rng: np.random.Generator) -> "AnsatzParams":
        """Weights uniform in [-1, 1], biases uniform in [-pi, pi].

        Features are standardized upstream, so unit-scale weights already
        span the useful transfer-angle range; wider weight inits push many
        restarts into wrapped-angle local minima. When the circuit starts in
        a class subspace (init_levels < dim), the transfer angles of
        transitions above that subspace begin small: those rotations only
        drain amplitude upward, and large initial values trap the descent.
        """
        if spec.variant == "g3":
            wshape = (spec.layers, spec.angles_per_sublayer, spec.data_dim)
            bshape = (spec.layers, spec.angles_per_sublayer)
        else:
            wshape = (spec.layers, spec.data_dim)
            bshape = (spec.layers, spec.data_dim)
        w = rng.uniform(-1.0, 1.0, size=wshape)
        b = rng.uniform(-math.pi, math.pi, size=bshape)
        scale = _upper_transfer_scale(spec)
        if scale is not None:
            w = w * scale[..., None] if spec.variant == "g3" else w * scale
            b = b * scale
        return AnsatzParams(w, b)

    @staticmethod
    def from_vector(spec: EncodingSpec, vec) -> "AnsatzParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (spec.n_params,):
            raise EncodingError(
                f"parameter vector has length {vec.shape}, expected {spec.n_params}"
            )
        if spec.variant == "g3":
            a = spec.angles_per_sublayer
            nw = spec.layers * a * spec.data_dim
            w = vec[:nw].reshape(spec.layers, a, spec.data_dim)
            b = vec[nw:].reshape(spec.layers, a)
        else:
            nw = spec.layers * spec.data_dim
            w = vec[:nw].reshape(spec.layers, spec.data_dim)
            b = vec[nw:].reshape(spec.layers, spec.data_dim)
        return AnsatzParams(w.copy(), b.copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.weights), np.ravel(self.biases)])

    def validate(self, spec: EncodingSpec):
        if spec.variant == "g3":
            wshape = (spec.layers, spec.angles_per_sublayer, spec.data_dim)
            bshape = (spec.layers, spec.angles_per_sublayer)
        else:
            wshape = (spec.layers, spec.data_dim)
            bshape = (spec.layers, spec.data_dim)
        if np.shape(self.weights) != wshape or np.shape(self.biases) != bshape:
            raise EncodingError(
                f"parameter shapes {np.shape(self.weights)}/{np.shape(self.biases)} "
                f"do not match encoding {spec.variant} (want {wshape}/{bshape})"
            )


def _upper_transfer_scale(spec: EncodingSpec, factor=0.2):
    """Per-parameter init damping applied when the circuit starts in a class
    subspace smaller than the rotation ladder.

    Transfer angles of transitions above the subspace only drain amplitude
    upward, and the phase slots feed a shallow phase-only attractor against
    real-amplitude centers, so both start quiet; the subspace transfer
    angles keep their full range. None when every transition begins
    populated.
    """
    if spec.init_levels is None or spec.init_levels >= spec.anchors:
        return None
    a = spec.angles_per_sublayer
    slot_scale = np.full(a, factor)
    for t in range(spec.transitions):
        if t < spec.init_levels - 1:
            slot_scale[2 * t] = 1.0
    if spec.variant == "g3":
        return np.broadcast_to(slot_scale, (spec.layers, a)).copy()
    per_entry = np.array([slot_scale[i % a] for i in range(spec.data_dim)])
    return np.broadcast_to(per_entry, (spec.layers, spec.data_dim)).copy()


def encode(x, spec: EncodingSpec, params: AnsatzParams) -> np.ndarray:
    """Map a feature vector to the rotation-angle schedule.

    Returns an array of shape (layers, sublayers, transitions, 2): the
    transformed vector x' is zero-padded up to a multiple of 2*(n-1), split
    into consecutive tuples of that size, and within each tuple entry 2i is
    theta_i and entry 2i+1 is phi_i.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.data_dim,):
        raise EncodingError(
            f"feature vector has shape {x.shape}, expected ({spec.data_dim},)"
        )
    params.validate(spec)
    return encode_vectors(x[None, :], spec, params.to_vector()[None, :])[0, 0]


def encode_vectors(X, spec: EncodingSpec, vecs) -> np.ndarray:
    """Batched encoding over data points and flat parameter vectors.

    X has shape (N, data_dim), vecs shape (M, n_params); the result has shape
    (M, N, layers, sublayers, transitions, 2). This is the hot path used by
    the optimizers, where M runs over finite-difference probes.
    """
    X = np.asarray(X, dtype=float)
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    if X.ndim != 2 or X.shape[1] != spec.data_dim:
        raise EncodingError(
            f"feature matrix has shape {X.shape}, expected (N, {spec.data_dim})"
        )
    if vecs.shape[1] != spec.n_params:
        raise EncodingError(
            f"parameter vectors have length {vecs.shape[1]}, expected {spec.n_params}"
        )
    m, n = vecs.shape[0], X.shape[0]
    L = spec.layers
    a = spec.angles_per_sublayer
    if spec.variant == "g3":
        nw = L * a * spec.data_dim
        w = vecs[:, :nw].reshape(m, L, a, spec.data_dim)
        b = vecs[:, nw:].reshape(m, L, a)
        xp = np.einsum("mlad,nd->mnla", w, X) + b[:, None, :, :]
        angles = xp.reshape(m, n, L, 1, spec.transitions, 2)
    else:
        nw = L * spec.data_dim
        w = vecs[:, :nw].reshape(m, L, spec.data_dim)
        b = vecs[:, nw:].reshape(m, L, spec.data_dim)
        xp = w[:, None, :, :] * X[None, :, None, :] + b[:, None, :, :]
        pad = spec.padded_dim - spec.data_dim
        if pad:
            xp = np.concatenate(
                [xp, np.zeros((m, n, L, pad))], axis=-1
            )
        angles = xp.reshape(
            m, n, L, spec.sublayers_per_layer, spec.transitions, 2
        )
    return angles


def evolve_angles(angles, spec: EncodingSpec, basis: VirtualBasis | None = None):
    """Run the rotation ansatz for a (batched) angle schedule.

    angles has shape (..., layers, sublayers, transitions, 2); the result has
    shape (..., dim). Without a virtual basis the rotations act on adjacent
    levels (t, t+1) and are applied with the closed-form 2x2 update; with a
    basis the full generator is exponentiated per sample.
    """
    angles = np.asarray(angles, dtype=float)
    batch = angles.shape[:-4]
    L, S, T, _ = angles.shape[-4:]
    if T != spec.transitions:
        raise EncodingError(
            f"angle schedule has {T} transitions per sublayer, expected {spec.transitions}"
        )
    if basis is not None:
        if basis.size != spec.anchors:
            raise DimensionError(
                f"virtual basis has {basis.size} states, encoding expects {spec.anchors}"
            )
        if basis.dim != spec.dim:
            raise DimensionError("virtual basis dimension does not match qudit")
    amps = np.broadcast_to(spec.initial_state(), batch + (spec.dim,)).copy()
    for lay in range(L):
        for sub in range(S):
            for t in range(T):
                theta = angles[..., lay, sub, t, 0]
                phi = angles[..., lay, sub, t, 1]
                if basis is None:
                    c = np.cos(theta / 2.0)
                    s = np.sin(theta / 2.0)
                    ep = np.exp(1j * phi)
                    ak = amps[..., t].copy()
                    al = amps[..., t + 1]
                    amps[..., t] = c * ak - 1j * s * np.conj(ep) * al
                    amps[..., t + 1] = -1j * s * ep * ak + c * al
                else:
                    amps = _apply_virtual(amps, basis, t, t + 1, theta, phi)
    return amps


def _apply_virtual(amps, basis, k, l, theta, phi):
    """exp(-i theta/2 tau_{k,l}(phi)) applied per sample via eigh."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    shape = np.broadcast_shapes(theta.shape, phi.shape, amps.shape[:-1])
    d = basis.dim
    a = np.outer(basis.states[k], basis.states[l].conj())
    flat = np.broadcast_to(amps, shape + (d,)).reshape(-1, d).copy()
    th = np.broadcast_to(theta, shape).ravel()
    ph = np.broadcast_to(phi, shape).ravel()
    gens = np.exp(-1j * ph)[:, None, None] * a
    gens = gens + np.conj(np.swapaxes(gens, -1, -2))
    w, v = np.linalg.eigh(gens)
    phase = np.exp(-0.5j * th[:, None] * w)
    # R psi = V diag(phase) V^dagger psi, batched
    tmp = np.einsum("bij,bj->bi", np.conj(np.swapaxes(v, -1, -2)), flat)
    tmp = phase * tmp
    out = np.einsum("bij,bj->bi", v, tmp)
    return out.reshape(amps.shape)


def build_circuit(x, spec: EncodingSpec, params: AnsatzParams,
                  basis: VirtualBasis | None = None) -> np.ndarray:
    """Encode one feature vector and run the full ansatz from the start state."""
    return evolve_angles(encode(x, spec, params), spec, basis)


def build_states(X, spec: EncodingSpec, params: AnsatzParams,
                 basis: VirtualBasis | None = None) -> np.ndarray:
    """Vectorized build_circuit over the rows of X; returns (N, dim)."""
    angles = encode_vectors(X, spec, params.to_vector()[None, :])[0]
    return evolve_angles(angles, spec, basis)


def ladder_rotations(angles) -> list[Rotation]:
    """Flatten an angle schedule into the time-ordered rotation list."""
    angles = np.asarray(angles, dtype=float)
    L, S, T, _ = angles.shape
    rots = []
    for lay in range(L):
        for sub in range(S):
            for t in range(T):
                rots.append(
                    Rotation(t, t + 1, angles[lay, sub, t, 0], angles[lay, sub, t, 1])
                )
    return rots


def apply_rotations(state, rotations) -> np.ndarray:
    psi = np.asarray(state, dtype=complex).copy()
    for rot in rotations:
        psi = apply_rotation(psi, rot)
    return psi


def synthesize_reference_unitary(target) -> list[Rotation]:
    """Ladder rotations taking |0> to the target state up to a global phase.

    Writing the target as sum_j c_j e^{i beta_j} |j> with c_j >= 0 and the
    global phase fixed so the first nonzero amplitude is real positive, the
    amplitudes produced by a ladder R_{0,1}, R_{1,2}, ... are

        <k|psi> = cos(theta_k/2) * prod_{l<k} (-i sin(theta_l/2) e^{i phi_l}),

    which pins theta_k = 2 arccos(c_k / P_k) with P_k = prod_{l<k} sin(theta_l/2)
    and the phase recursion phi_k = beta_{k+1} + (k+1) pi/2 - sum_{l<k} phi_l.
    """
    t = np.asarray(target, dtype=complex)
    if t.ndim != 1 or t.shape[0] < 2:
        raise DimensionError("target must be a state vector of dimension >= 2")
    if norm_error(t) > 1e-9:
        raise DimensionError("target state must be normalized")
    d = t.shape[0]
    nz = np.flatnonzero(np.abs(t) > 1e-15)
    if nz.size:
        t = t * np.exp(-1j * np.angle(t[nz[0]]))
    c = np.abs(t)
    beta = np.angle(t)

    thetas = np.zeros(d - 1)
    p = 1.0
    for k in range(d - 1):
        if p < 1e-12:
            # all remaining amplitude already placed; c_k is zero too
            thetas[k] = 0.0
            continue
        ratio = min(max(c[k] / p, 0.0), 1.0)
        thetas[k] = 2.0 * math.acos(ratio)
        p *= math.sin(thetas[k] / 2.0)

    phis = np.zeros(d - 1)
    acc = 0.0
    for k in range(d - 1):
        phis[k] = beta[k + 1] + (k + 1) * math.pi / 2.0 - acc
        acc += phis[k]

    return [Rotation(k, k + 1, thetas[k], phis[k]) for k in range(d - 1)]
