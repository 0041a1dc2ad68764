"""Derivative-free optimizers shared by the noiseless and noisy trainers.

Both optimizers only ever see a batched loss callable
``loss_batch(vecs: (M, n)) -> (M,)`` so that circuit evaluation can be
vectorized across finite-difference probes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    loss: float
    history: list = field(default_factory=list)  # (cumulative evals, loss)
    n_evals: int = 0
    converged: bool = False


def adam_finite_difference(
    loss_batch,
    x0,
    *,
    learning_rate=0.05,
    fd_step=1e-5,
    max_epochs=500,
    patience=20,
    min_improvement=1e-7,
    max_evals=None,
    beta1=0.9,
    beta2=0.999,
    eps=1e-8,
) -> OptimizeResult:
    """Adaptive-moment gradient descent on central finite differences.

    Per epoch the gradient costs 2n loss evaluations plus one evaluation at
    the current point for the history. Stops early once the best loss has not
    improved by min_improvement for `patience` consecutive epochs.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    m = np.zeros(n)
    v = np.zeros(n)
    evals = 0

    loss0 = float(loss_batch(x[None, :])[0])
    evals += 1
    history = [(evals, loss0)]
    best_loss, best_x = loss0, x.copy()
    if loss0 <= 1e-12:
        return OptimizeResult(best_x, best_loss, history, evals, converged=True)

    last_improve = 0
    converged = False
    for epoch in range(1, max_epochs + 1):
        if max_evals is not None and evals + 2 * n + 1 > max_evals:
            break
        probes = np.repeat(x[None, :], 2 * n, axis=0)
        idx = np.arange(n)
        probes[2 * idx, idx] += fd_step
        probes[2 * idx + 1, idx] -= fd_step
        ls = np.asarray(loss_batch(probes), dtype=float)
        evals += 2 * n
        grad = (ls[0::2] - ls[1::2]) / (2.0 * fd_step)

        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        mhat = m / (1.0 - beta1**epoch)
        vhat = v / (1.0 - beta2**epoch)
        x = x - learning_rate * mhat / (np.sqrt(vhat) + eps)

        cur = float(loss_batch(x[None, :])[0])
        evals += 1
        history.append((evals, cur))
        if cur < best_loss - min_improvement:
            last_improve = epoch
        if cur < best_loss:
            best_loss, best_x = cur, x.copy()
        if cur <= 1e-12:
            converged = True
            break
        if epoch - last_improve >= patience:
            converged = True
            break

    return OptimizeResult(best_x, best_loss, history, evals, converged)


def spsa(
    loss_batch,
    x0,
    rng: np.random.Generator,
    *,
    a=0.2,
    c=0.1,
    big_a=3.0,
    alpha=0.602,
    gamma=0.101,
    epochs=30,
    max_evals=None,
) -> OptimizeResult:
    """Simultaneous-perturbation stochastic approximation.

    Two loss evaluations per epoch regardless of dimension; the returned
    parameters are the best probe point seen (there is no extra evaluation at
    the iterate itself).
    """
    x = np.array(x0, dtype=float)
    n = x.size
    evals = 0
    history = []
    best_loss = np.inf
    best_x = x.copy()
    for epoch in range(epochs):
        if max_evals is not None and evals + 2 > max_evals:
            break
        an = a / (epoch + 1 + big_a) ** alpha
        cn = c / (epoch + 1) ** gamma
        delta = rng.integers(0, 2, size=n) * 2.0 - 1.0
        probes = np.stack([x + cn * delta, x - cn * delta])
        lp, lm = np.asarray(loss_batch(probes), dtype=float)
        evals += 2
        history.append((evals - 1, float(lp)))
        history.append((evals, float(lm)))
        if lp < best_loss:
            best_loss, best_x = float(lp), probes[0].copy()
        if lm < best_loss:
            best_loss, best_x = float(lm), probes[1].copy()
        ghat = (lp - lm) / (2.0 * cn) * delta
        x = x - an * ghat
    return OptimizeResult(best_x, best_loss, history, evals, converged=False)
