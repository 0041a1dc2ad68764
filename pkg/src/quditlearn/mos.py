"""Maximally orthogonal state sets via a genetic algorithm.

A set of K pure states in dimension d is scored by the overlap energy

    E_W = sum_{i != j} W(|<psi_i|psi_j>|),

summed over ordered pairs, with an increasing weighting function W (default
W(x) = x^p with p = 2). Orthonormal sets have E_W = 0; for K > d the minimum
is positive and the minimizers spread the states as far apart as the
geometry allows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EncodingError


def power_weight(p: float):
    def w(x):
        return np.abs(x) ** p
    return w


def gram_matrix(states) -> np.ndarray:
    """K x K matrix of absolute overlaps |<psi_i|psi_j>|."""
    s = np.asarray(states, dtype=complex)
    if s.ndim != 2 or s.shape[0] < 1:
        raise DimensionError("need a (K, d) array of states")
    return np.abs(s.conj() @ s.T)


def mos_energy(states, weight=None) -> float:
    """Overlap energy over both ordered pairs (each unordered pair twice)."""
    s = np.asarray(states, dtype=complex)
    if s.ndim != 2 or s.shape[0] < 2:
        raise DimensionError("energy needs at least two states")
    w = power_weight(2.0) if weight is None else weight
    g = gram_matrix(s)
    np.fill_diagonal(g, 0.0)
    vals = w(g)
    np.fill_diagonal(vals, 0.0)
    return float(vals.sum())


@dataclass
class Individual:
    """One candidate state set; fitness is the negated overlap energy."""

    states: np.ndarray  # (K, d)
    fitness: float

    @staticmethod
    def evaluate(states, weight) -> "Individual":
        return Individual(states, -mos_energy(states, weight))


@dataclass
class GAConfig:
    population_size: int = 64
    crossover_prob: float = 0.7
    mutation_prob: float = 0.2
    max_generations: int = 500
    convergence_window: int = 50
    weight_exponent: float = 2.0
    local_opt_steps: int = 50
    local_opt_rate: float = 0.01
    elite: int = 2
    tournament: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise EncodingError("population must hold at least two individuals")
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.mutation_prob <= 1.0):
            raise EncodingError("probabilities must lie in [0, 1]")
        if self.weight_exponent <= 0:
            raise EncodingError("weight exponent must be positive")


def _random_states(d, k, rng) -> np.ndarray:
    s = rng.normal(size=(k, d)) + 1j * rng.normal(size=(k, d))
    return s / np.linalg.norm(s, axis=1, keepdims=True)


def _energy_gradient(states, p):
    """Wirtinger gradient of E_W with W(x) = x^p w.r.t. conj(states)."""
    z = states.conj() @ states.T
    mag = np.abs(z)
    np.fill_diagonal(mag, 0.0)
    if p == 2.0:
        coef = np.ones_like(mag)
    else:
        safe = np.where(mag > 1e-14, mag, 1.0)
        coef = np.where(mag > 1e-14, safe ** (p - 2.0), 0.0)
    np.fill_diagonal(coef, 0.0)
    return p * (coef * z.conj()) @ states


def local_optimize(states, p, steps, rate) -> np.ndarray:
    """Projected gradient descent on E_W; returns the improved set.

    Keeps the original set if the fixed-step descent happened to end higher.
    """
    weight = power_weight(p)
    best = states
    best_e = mos_energy(states, weight)
    cur = states.copy()
    for _ in range(steps):
        cur = cur - rate * _energy_gradient(cur, p)
        cur /= np.linalg.norm(cur, axis=1, keepdims=True)
    e = mos_energy(cur, weight)
    if e < best_e:
        return cur
    return best


def _crossover(a, b, rng):
    mask = rng.integers(0, 2, size=a.shape[0]).astype(bool)
    child1 = np.where(mask[:, None], a, b)
    child2 = np.where(mask[:, None], b, a)
    return child1.copy(), child2.copy()


def _mutate(states, rng):
    out = states.copy()
    idx = rng.integers(0, states.shape[0])
    d = states.shape[1]
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2.0
    eps = rng.uniform(0.0, 0.1)
    w, v = np.linalg.eigh(h)
    u = v @ np.diag(np.exp(-1j * eps * w)) @ v.conj().T
    out[idx] = u @ out[idx]
    out[idx] /= np.linalg.norm(out[idx])
    return out


def _tournament(population, rng, size):
    picks = rng.integers(0, len(population), size=size)
    best = max(picks, key=lambda i: population[i].fitness)
    return int(best)


@dataclass
class EvolveResult:
    best: Individual
    generations: int
    history: list = field(default_factory=list)  # best fitness per generation


def evolve(config: GAConfig, d: int, k: int) -> Individual:
    """Run the genetic algorithm and return the best individual ever seen."""
    return evolve_detailed(config, d, k).best


def evolve_detailed(config: GAConfig, d: int, k: int) -> EvolveResult:
    if d < 2 or k < 2:
        raise DimensionError("need d >= 2 and K >= 2")
    rng = np.random.default_rng([int(config.seed), d, k])
    p = config.weight_exponent
    weight = power_weight(p)

    population = [
        Individual.evaluate(_random_states(d, k, rng), weight)
        for _ in range(config.population_size)
    ]
    best = max(population, key=lambda ind: ind.fitness)
    history = [best.fitness]
    last_improve = 0

    for gen in range(1, config.max_generations + 1):
        population.sort(key=lambda ind: ind.fitness, reverse=True)
        elites = population[: config.elite]

        n_children = config.population_size - len(elites)
        children = []
        parent_ids = set()
        while len(children) < n_children:
            i = _tournament(population, rng, config.tournament)
            j = _tournament(population, rng, config.tournament)
            parent_ids.update((i, j))
            pa, pb = population[i].states, population[j].states
            if rng.uniform() < config.crossover_prob:
                ca, cb = _crossover(pa, pb, rng)
            else:
                ca, cb = pa.copy(), pb.copy()
            for child in (ca, cb):
                if len(children) >= n_children:
                    break
                if rng.uniform() < config.mutation_prob:
                    child = _mutate(child, rng)
                children.append(Individual.evaluate(child, weight))

        optimized = []
        for i in sorted(parent_ids):
            states = local_optimize(
                population[i].states, p, config.local_opt_steps, config.local_opt_rate
            )
            optimized.append(Individual.evaluate(states, weight))

        pool = elites + optimized + children
        pool.sort(key=lambda ind: ind.fitness, reverse=True)
        population = pool[: config.population_size]

        if population[0].fitness > best.fitness + 1e-10:
            best = population[0]
            last_improve = gen
        elif population[0].fitness > best.fitness:
            best = population[0]
        history.append(best.fitness)
        if gen - last_improve >= config.convergence_window:
            break

    states = fix_phase_gauge(best.states)
    return EvolveResult(
        best=Individual.evaluate(states, weight),
        generations=len(history) - 1,
        history=history,
    )


def fix_phase_gauge(states) -> np.ndarray:
    """Rotate each state so its first nonzero amplitude is real non-negative."""
    out = np.asarray(states, dtype=complex).copy()
    for row in out:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size:
            row *= np.exp(-1j * np.angle(row[nz[0]]))
    return out


# ---------------------------------------------------------------------------
# MOS file format: plain text, consumed as ReferenceSet or VirtualBasis
# ---------------------------------------------------------------------------

MOS_FORMAT = "quditlearn-mos v1"


def save_mos(states, path, weight_exponent=2.0):
    s = np.asarray(states, dtype=complex)
    k, d = s.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MOS_FORMAT + "\n")
        fh.write(f"d = {d}\n")
        fh.write(f"K = {k}\n")
        fh.write(f"w_exponent = {weight_exponent!r}\n")
        for i in range(k):
            pairs = " ".join(
                f"({float(v.real)!r}, {float(v.imag)!r})" for v in s[i]
            )
            fh.write(f"state {i}: {pairs}\n")


def load_mos(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != MOS_FORMAT:
        raise EncodingError(f"{path}: not a {MOS_FORMAT} document")
    header = {}
    body = []
    for ln in lines[1:]:
        if ln.startswith("state "):
            body.append(ln)
        else:
            key, val = (s.strip() for s in ln.split("=", 1))
            header[key] = val
    d, k = int(header["d"]), int(header["K"])
    states = np.zeros((k, d), dtype=complex)
    for ln in body:
        label, rest = ln.split(":", 1)
        idx = int(label.split()[1])
        chunks = rest.replace("(", " ").replace(")", " ").replace(",", " ").split()
        vals = [float(c) for c in chunks]
        if len(vals) != 2 * d:
            raise EncodingError(f"{path}: state {idx} has wrong length")
        states[idx] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
    norms = np.linalg.norm(states, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise EncodingError(f"{path}: states are not normalized")
    return states
