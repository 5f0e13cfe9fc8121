"""Limited-memory BFGS with Armijo backtracking for smooth unconstrained problems."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteObjectiveError


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    message: str
    trace: list[float] = field(default_factory=list)


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
    fun, x0, *, history=10, max_iters=1000, grad_tol=1e-7, f_tol=4 * np.finfo(float).eps, c1=1e-4, max_halvings=60
) -> OptimResult:
    """Minimise ``fun(x) -> (value, gradient)``.

    Stops when ||grad||_inf <= grad_tol, when an accepted step lowers f by
    no more than f_tol * max(1, |f|) (progress has hit rounding level),
    after ``max_iters`` iterations, or when the line search cannot find an
    Armijo step.  Curvature pairs with
    s'y <= 0 are skipped; if the quasi-Newton direction is not a descent
    direction the step falls back to steepest descent.  Every accepted step
    decreases the objective.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteObjectiveError("objective is not finite at the starting point")
    pairs: deque = deque(maxlen=history)
    trace = [float(f)]
    for it in range(max_iters):
        if np.max(np.abs(g)) <= grad_tol:
            return OptimResult(x, float(f), g, it, True, "gradient tolerance reached", trace)
        direction = _two_loop(g, pairs)
        slope = g @ direction
        if not slope < 0:
            pairs.clear()
            direction = -g
            slope = -(g @ g)
        step = 1.0 if pairs else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
        for _ in range(max_halvings):
            x_new = x + step * direction
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                break
            step *= 0.5
        else:
            return OptimResult(x, float(f), g, it, False, "line search failed", trace)
        if not np.all(np.isfinite(g_new)):
            raise NonFiniteObjectiveError("gradient became non-finite")
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        stalled = f - f_new <= f_tol * max(1.0, abs(f))
        x, f, g = x_new, f_new, g_new
        trace.append(float(f))
        if stalled:
            return OptimResult(x, float(f), g, it + 1, True, "relative decrease below f_tol", trace)
    return OptimResult(x, float(f), g, max_iters, bool(np.max(np.abs(g)) <= grad_tol), "iteration limit", trace)
