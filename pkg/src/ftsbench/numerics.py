"""Optimizers and gradient checking shared by the estimators.

``minimize_simplex`` is a plain Nelder-Mead used for the likelihood fits,
``adam_step`` is the bias-corrected Adam update used by the neural models,
and ``finite_diff_gradient``/``check_gradient`` verify hand-written
backward passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class OptimResult:
    x_star: np.ndarray
    f_star: float
    iterations: int
    converged: bool
    n_evals: int = 0


def minimize_simplex(
    objective: Callable[[np.ndarray], float],
    x0,
    max_iter: int = 2000,
    f_tol: float = 1e-10,
    x_tol: float = 1e-8,
    reflection: float = 1.0,
    expansion: float = 2.0,
    contraction: float = 0.5,
    shrink: float = 0.5,
    step=None,
) -> OptimResult:
    """Minimize ``objective`` with the Nelder-Mead simplex method.

    Non-finite objective values away from ``x0`` are treated as ``+inf`` so the
    simplex simply retreats from them. Convergence is declared when both the
    spread of function values and the simplex diameter fall below ``f_tol`` and
    ``x_tol``. The initial simplex offsets coordinate ``i`` by
    ``max(0.05 * |x0_i|, 0.00025)`` unless ``step`` gives explicit offsets.

    Raises:
        ValueError: if ``max_iter <= 0`` or the objective is not finite at ``x0``.
    """
    if max_iter <= 0:
        raise ValueError("max_iter must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at x0")
    n_evals = 1

    def f(x):
        nonlocal n_evals
        n_evals += 1
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    dim = x0.size
    simplex = np.empty((dim + 1, dim))
    fvals = np.empty(dim + 1)
    simplex[0], fvals[0] = x0, f0
    if step is None:
        offsets = np.maximum(0.05 * np.abs(x0), 0.00025)
    else:
        offsets = np.broadcast_to(np.asarray(step, dtype=np.float64), x0.shape)
    for i in range(dim):
        x = x0.copy()
        x[i] += offsets[i]
        simplex[i + 1], fvals[i + 1] = x, f(x)

    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if (
            np.max(np.abs(fvals[1:] - fvals[0])) <= f_tol
            and np.max(np.abs(simplex[1:] - simplex[0])) <= x_tol
        ):
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + reflection * (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + expansion * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + contraction * (xr - centroid)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = centroid + contraction * (worst - centroid)
                fc = f(xc)
                accept = fc < fvals[-1]
            if accept:
                simplex[-1], fvals[-1] = xc, fc
            else:
                for j in range(1, dim + 1):
                    simplex[j] = simplex[0] + shrink * (simplex[j] - simplex[0])
                    fvals[j] = f(simplex[j])

    best = int(np.argmin(fvals))
    return OptimResult(simplex[best].copy(), float(fvals[best]), it, converged, n_evals)


@dataclass
class AdamState:
    """First/second moment estimates plus hyperparameters for one parameter vector."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **hyper) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), 0, **hyper)


def adam_step(params, grads, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns new params and a new state."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if not (p.shape == g.shape == state.m.shape == state.v.shape):
        raise ValueError(
            f"dimension mismatch: params {p.shape}, grads {g.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient element")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_p = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)
    return new_p, new_state


def finite_diff_gradient(
    f: Callable[[np.ndarray], float], x, h: float = 1e-5, order: int = 2
) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of a vector.
        x: Point of evaluation.
        h: Step size.
        order: 2 for the two-point stencil ``(f(x+h) - f(x-h)) / 2h``; 4 for
            the five-point stencil, whose O(h^4) truncation error allows a
            step large enough to keep rounding noise small on coordinates
            with near-zero gradients.

    Raises:
        ValueError: On a non-finite evaluation or an unknown order.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64)).copy()
    offsets = (1.0, -1.0) if order == 2 else (2.0, 1.0, -1.0, -2.0)
    weights = (1.0, -1.0) if order == 2 else (-1.0, 8.0, -8.0, 1.0)
    denom = 2.0 * h if order == 2 else 12.0 * h
    grad = np.empty_like(x)
    for i in range(x.size):
        old = x.flat[i]
        vals = []
        for k in offsets:
            x.flat[i] = old + k * h
            vals.append(float(f(x)))
        x.flat[i] = old
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite evaluation at coordinate {i}")
        grad.flat[i] = sum(w * v for w, v in zip(weights, vals)) / denom
    return grad


def check_gradient(analytic, numeric) -> float:
    """Max relative error ``|a - n| / max(1e-8, |a| + |n|)`` over coordinates."""
    a = np.ravel(np.asarray(analytic, dtype=np.float64))
    n = np.ravel(np.asarray(numeric, dtype=np.float64))
    if a.shape != n.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(1e-8, np.abs(a) + np.abs(n))))
