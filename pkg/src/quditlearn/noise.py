"""Open-system simulation of the classifier under decay and dephasing.

During a resonant drive on the (j, j+1) transition the interaction-picture
master equation is

    drho/dt = -i [H, rho] + sum_i (1/T_i) (2 O_i rho O_i^+ - {O_i^+ O_i, rho}),
    H = (Omega_R / 2) (e^{i phi} |j><j+1| + h.c.),

with O_1 = sum_j |j><j+1| (decay) and O_2 = sum_j j |j><j| (dephasing).
Between pulses H = 0 and pulses are back to back. A rotation by theta maps to
a pulse of duration |theta| / Omega_R; the printed Hamiltonian realizes
R(theta, phi) when driven with phase -phi (negative theta additionally flips
the phase by pi).

The generator is linear and time-independent within a pulse, so the
fixed-step fourth-order integrator is applied through its one-step transfer
matrix raised to the step count, which is algebraically identical to stepping
and much faster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .core import EncodingSpec
from .errors import DimensionError, NumericalError
from .metric import ReferenceSet, TrainConfig
from .optimize import spsa

DEFAULT_RABI = 2.0 * math.pi * 10e6  # rad/s, a 10 MHz drive


@dataclass(frozen=True)
class NoiseModel:
    """Decay time T1, dephasing time T2 and drive strength (rad/s).

    Level splittings can be recorded for bookkeeping but do not enter the
    interaction-picture dynamics.
    """

    t1: float = 0.1
    t2: float = 1e-4
    rabi: float = DEFAULT_RABI
    splittings: tuple = ()

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0 or self.rabi <= 0:
            raise DimensionError("T1, T2 and the Rabi frequency must be positive")


@dataclass(frozen=True)
class Pulse:
    """One resonant drive segment; transition None means free evolution."""

    transition: int | None
    duration: float
    drive_phase: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise DimensionError("pulse duration must be non-negative")


def pulses_from_rotations(rotations, rabi) -> list[Pulse]:
    """Translate ladder rotations into drive pulses, in time order."""
    pulses = []
    for rot in rotations:
        if rot.l != rot.k + 1:
            raise DimensionError(
                f"drive only addresses adjacent levels, got ({rot.k}, {rot.l})"
            )
        theta, phi = rot.theta, rot.phi
        if theta < 0:
            theta, phi = -theta, phi + math.pi
        pulses.append(Pulse(rot.k, theta / rabi, -phi))
    return pulses


def inverse_pulses(rotations, rabi) -> list[Pulse]:
    """Pulses realizing the inverse of the given rotation sequence."""
    inverted = [rot.inverse() for rot in reversed(list(rotations))]
    return pulses_from_rotations(inverted, rabi)


def _lowering(d):
    return np.diag(np.ones(d - 1), k=1).astype(complex)


def _dephasing_op(d):
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def _drive_hamiltonian(d, transition, drive_phase, rabi):
    h = np.zeros((d, d), dtype=complex)
    if transition is None:
        return h
    if not (0 <= transition < d - 1):
        raise DimensionError(f"transition {transition} out of range for d={d}")
    h[transition, transition + 1] = 0.5 * rabi * np.exp(1j * drive_phase)
    h[transition + 1, transition] = 0.5 * rabi * np.exp(-1j * drive_phase)
    return h


def _dissipator_apply(rho, op, t_const):
    sandwich = op @ rho @ op.conj().T
    opdag_op = op.conj().T @ op
    return (2.0 * sandwich - opdag_op @ rho - rho @ opdag_op) / t_const


def lindblad_rhs(rho, pulse: Pulse | None, model: NoiseModel) -> np.ndarray:
    """Right-hand side of the master equation for one (or no) active pulse."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    transition = pulse.transition if pulse is not None else None
    phase = pulse.drive_phase if pulse is not None else 0.0
    h = _drive_hamiltonian(d, transition, phase, model.rabi)
    out = -1j * (h @ rho - rho @ h)
    out += _dissipator_apply(rho, _lowering(d), model.t1)
    out += _dissipator_apply(rho, _dephasing_op(d), model.t2)
    return out


def _superop(a, b):
    # vec(A rho B) = (A kron B^T) vec(rho) for C-order flattening
    return np.kron(a, b.T)


def _liouvillian_dissipators(d, model) -> np.ndarray:
    eye = np.eye(d, dtype=complex)
    lmat = np.zeros((d * d, d * d), dtype=complex)
    for op, t_const in ((_lowering(d), model.t1), (_dephasing_op(d), model.t2)):
        opdag_op = op.conj().T @ op
        lmat += (
            2.0 * _superop(op, op.conj().T)
            - _superop(opdag_op, eye)
            - _superop(eye, opdag_op)
        ) / t_const
    return lmat


def _liouvillian(d, pulse: Pulse | None, model, diss=None) -> np.ndarray:
    transition = pulse.transition if pulse is not None else None
    phase = pulse.drive_phase if pulse is not None else 0.0
    h = _drive_hamiltonian(d, transition, phase, model.rabi)
    eye = np.eye(d, dtype=complex)
    lmat = -1j * (_superop(h, eye) - _superop(eye, h))
    lmat += _liouvillian_dissipators(d, model) if diss is None else diss
    return lmat


def _rk4_transfer(lmat, h):
    a = h * lmat
    eye = np.eye(lmat.shape[0], dtype=complex)
    return eye + a @ (eye + (a / 2.0) @ (eye + (a / 3.0) @ (eye + a / 4.0)))


def step_count(duration, rabi) -> int:
    """Steps of the fixed-step integrator: h <= min(t_p/200, 1/(50 Omega))."""
    return max(200, int(math.ceil(duration * 50.0 * rabi)))


def pulse_propagator(d, pulse: Pulse, model: NoiseModel, diss=None) -> np.ndarray:
    """d^2 x d^2 transfer matrix of one pulse under the RK4 step map."""
    if pulse.duration <= 0.0:
        return np.eye(d * d, dtype=complex)
    n = step_count(pulse.duration, model.rabi)
    h = pulse.duration / n
    m = _rk4_transfer(_liouvillian(d, pulse, model, diss), h)
    return np.linalg.matrix_power(m, n)


def validate_density(rho, *, trace_tol=1e-9, herm_tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError("density matrix must be square")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise NumericalError("density matrix trace deviates from 1")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise NumericalError("density matrix is not Hermitian")
    return rho


def evolve_schedule(rho0, schedule, model: NoiseModel) -> np.ndarray:
    """Integrate the master equation through the pulses in order.

    Zero-duration pulses are skipped.
    """
    rho = validate_density(rho0)
    d = rho.shape[0]
    v = rho.ravel().copy()
    diss = _liouvillian_dissipators(d, model)
    for pulse in schedule:
        if pulse.duration <= 0.0:
            continue
        v = pulse_propagator(d, pulse, model, diss) @ v
    return v.reshape(d, d)


def evolve_free(rho0, duration, model: NoiseModel) -> np.ndarray:
    """Undriven evolution (decay and dephasing only) for the given time."""
    if duration <= 0.0:
        return np.asarray(rho0, dtype=complex).copy()
    return evolve_schedule(rho0, [Pulse(None, duration)], model)


def ground_population(rho) -> float:
    """rho_00; the measured overlap with |0> after the inverse reference."""
    rho = np.asarray(rho, dtype=complex)
    val = rho[0, 0]
    if abs(val.imag) >= 1e-10:
        raise NumericalError(f"rho_00 has imaginary part {val.imag:.3e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# noisy training and testing of the explicit classifier
# ---------------------------------------------------------------------------


class NoisySimulator:
    """Pulse-level classifier evaluation for a fixed encoding and noise model.

    The inverse-reference pulse sequences are fixed per class, so their
    transfer matrices are computed once and reused for every data point.
    """

    def __init__(self, spec: EncodingSpec, model: NoiseModel, refs: ReferenceSet):
        if spec.n_anchors is not None:
            raise DimensionError("pulse simulation drives adjacent levels only")
        self.spec = spec
        self.model = model
        self.refs = refs
        d = spec.dim
        self._diss = _liouvillian_dissipators(d, model)
        rho0 = np.outer(spec.initial_state(), spec.initial_state().conj())
        self._v0 = rho0.ravel()
        self.ref_propagators = []
        for center in refs.centers:
            rots = core.synthesize_reference_unitary(center)
            prop = np.eye(d * d, dtype=complex)
            for pulse in inverse_pulses(rots, model.rabi):
                if pulse.duration <= 0.0:
                    continue
                prop = pulse_propagator(d, pulse, model, self._diss) @ prop
            self.ref_propagators.append(prop)

    def _final_vec(self, angles) -> np.ndarray:
        """Propagate the initial state through one encoded pulse sequence."""
        v = self._v0.copy()
        d = self.spec.dim
        for rot in core.ladder_rotations(angles):
            for pulse in pulses_from_rotations([rot], self.model.rabi):
                if pulse.duration <= 0.0:
                    continue
                v = pulse_propagator(d, pulse, self.model, self._diss) @ v
        return v

    def loss_batch(self, X, labels, vecs) -> np.ndarray:
        """Mean ground-population infidelity to the per-class reference."""
        vecs = np.atleast_2d(vecs)
        labels = np.asarray(labels)
        angles = core.encode_vectors(X, self.spec, vecs)
        k = self.refs.size
        losses = np.zeros(vecs.shape[0])
        for m in range(vecs.shape[0]):
            per_class = np.zeros(k)
            counts = np.zeros(k)
            for i in range(X.shape[0]):
                v = self._final_vec(angles[m, i])
                v = self.ref_propagators[labels[i]] @ v
                per_class[labels[i]] += v[0].real
                counts[labels[i]] += 1
            losses[m] = 1.0 - np.mean(per_class / counts)
        return losses

    def bind_training(self, X, labels):
        labels = np.asarray(labels)
        if np.bincount(labels, minlength=self.refs.size).min() == 0:
            raise DimensionError("every class needs at least one training point")
        X = np.asarray(X, dtype=float)
        return lambda vecs: self.loss_batch(X, labels, vecs)

    def ground_fidelities(self, X, vec) -> np.ndarray:
        """(N, K) ground populations after each inverse reference."""
        angles = core.encode_vectors(X, self.spec, np.asarray(vec)[None, :])[0]
        out = np.zeros((X.shape[0], self.refs.size))
        for i in range(X.shape[0]):
            v = self._final_vec(angles[i])
            for kk, prop in enumerate(self.ref_propagators):
                out[i, kk] = (prop @ v)[0].real
        return out

    def predict(self, X, vec) -> np.ndarray:
        return np.argmax(self.ground_fidelities(X, vec), axis=1)


def spsa_train(X, y, spec: EncodingSpec, model: NoiseModel, refs: ReferenceSet,
               config: TrainConfig, rng: np.random.Generator, init_vec=None):
    """One noisy training run: SPSA on the pulse-level explicit loss.

    Returns the simulator, the best probe parameters and the optimizer record.
    """
    sim = NoisySimulator(spec, model, refs)
    loss_batch = sim.bind_training(np.asarray(X, dtype=float), y)
    if init_vec is None:
        init_vec = core.AnsatzParams.random(spec, rng).to_vector()
    res = spsa(
        loss_batch,
        init_vec,
        rng,
        a=config.spsa_a,
        c=config.spsa_c,
        big_a=config.spsa_big_a,
        epochs=config.max_epochs,
        max_evals=config.max_evals,
    )
    return sim, res


def noisy_test(sim: NoisySimulator, vec, X, y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise DimensionError("test split is empty")
    pred = sim.predict(np.asarray(X, dtype=float), vec)
    return float(np.mean(pred == y))


@dataclass
class ChainedRun:
    run: int
    final_train_loss: float
    test_accuracy: float
    warm_started: bool
    params_vec: np.ndarray


def run_chained(X_train, y_train, X_test, y_test, spec, model, refs, config,
                runs=50) -> list:
    """Sequence of SPSA runs where each run warm-starts from its predecessor's
    best parameters if that run improved the test accuracy, and is randomly
    reinitialized otherwise."""
    sim = NoisySimulator(spec, model, refs)
    loss_batch = sim.bind_training(np.asarray(X_train, dtype=float), y_train)
    records = []
    prev_acc = -np.inf
    carry = None
    for run in range(runs):
        rng = np.random.default_rng([int(config.seed), run, 0x90])
        x0 = carry if carry is not None else core.AnsatzParams.random(spec, rng).to_vector()
        res = spsa(
            loss_batch,
            x0,
            rng,
            a=config.spsa_a,
            c=config.spsa_c,
            big_a=config.spsa_big_a,
            epochs=config.max_epochs,
            max_evals=config.max_evals,
        )
        acc = noisy_test(sim, res.x, X_test, y_test)
        records.append(
            ChainedRun(run, res.loss, acc, carry is not None, res.x.copy())
        )
        carry = res.x.copy() if acc > prev_acc else None
        prev_acc = acc
    return records
