"""Limited-memory BFGS with a backtracking Armijo line search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class LbfgsResult:
    x: np.ndarray
    fun: float
    n_iter: int
    converged: bool
    history: list


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def lbfgs(
    fun_grad,
    x0,
    memory: int = 10,
    max_iter: int = 200,
    gtol: float = 1e-6,
    c1: float = 1e-4,
    shrink: float = 0.5,
    max_backtracks: int = 60,
) -> LbfgsResult:
    """Minimize ``fun_grad(x) -> (f, g)`` starting from ``x0``.

    Every accepted step satisfies the Armijo sufficient-decrease condition,
    so ``history`` (objective after each accepted step) is strictly
    decreasing.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun_grad(x)
    history = [f]
    pairs = deque(maxlen=memory)
    n_iter = 0
    converged = np.linalg.norm(g) < gtol
    while not converged and n_iter < max_iter:
        d = _two_loop(g, pairs)
        slope = g @ d
        if not slope < 0:
            pairs.clear()
            d = -g
            slope = -(g @ g)
        # first step: unit length along -g, afterwards trust the quasi-Newton scale
        step = 1.0 if pairs else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-12))
        for _ in range(max_backtracks):
            x_new = x + step * d
            f_new, g_new = fun_grad(x_new)
            if f_new <= f + c1 * step * slope:
                break
            step *= shrink
        else:
            break
        if not f_new < f:
            break
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.sqrt((s @ s) * (y @ y)):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        history.append(f)
        n_iter += 1
        converged = np.linalg.norm(g) < gtol
    return LbfgsResult(x, float(f), n_iter, bool(converged), history)
