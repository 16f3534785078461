"""Projected gradient descent on a level set of a homogeneous function.

Minimises ``fun`` over ``{x : con(x) = level}`` where ``con`` is positively
homogeneous of some degree, so that rescaling is an exact retraction onto
the level set.  Gradients are with respect to the weighted inner product
``<a, b> = sum(weights * a * b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray

ARMIJO_C = 1e-4
SHRINK = 0.5
_EPS = np.finfo(float).eps


@dataclass
class DescentResult:
    x: Array
    value: float
    iterations: int
    grad_norm: float
    converged: bool


def project(g: Array, h: Array, weights: Array) -> Array:
    """Remove from ``g`` its weighted component along ``h``."""
    hh = np.dot(weights * h, h)
    if hh == 0.0:
        return g
    return g - (np.dot(weights * g, h) / hh) * h


def level_set_descent(
    fun: Callable[[Array], float],
    grad: Callable[[Array], Array],
    con: Callable[[Array], float],
    con_grad: Callable[[Array], Array],
    x0: Array,
    *,
    level: float,
    degree: float,
    weights: Array,
    tol: float,
    max_iter: int,
    patience: int = 500,
) -> DescentResult:
    """Armijo backtracking along the projected negative gradient.

    The trial step length is the Barzilai-Borwein estimate from the last
    two iterates; backtracking halves it.  A step whose predicted decrease
    is below the rounding level of ``fun`` is accepted if it does not raise
    ``fun`` by more than that rounding level.  Iteration stops when the max
    norm of the projected gradient is at most ``tol * max(1, |fun|)``, or
    after ``patience`` iterations without improving the best gradient norm.
    """

    def retract(y: Array):
        c = con(y)
        if not np.isfinite(c) or c <= 0.0:
            return None
        return y * (level / c) ** (1.0 / degree)

    x = retract(np.asarray(x0, dtype=float))
    if x is None:
        raise ValueError("starting point is infeasible")
    f = fun(x)
    pg = project(grad(x), con_grad(x), weights)
    gnorm = float(np.max(np.abs(pg)))
    best_gnorm, since_best = gnorm, 0
    x_prev = pg_prev = None
    eta = 0.1 * np.sqrt(np.dot(weights * x, x) / max(np.dot(weights * pg, pg), 1e-300))

    it = 0
    while it < max_iter:
        if gnorm <= tol * max(1.0, abs(f)):
            return DescentResult(x, f, it, gnorm, True)
        if since_best > patience:
            break
        if x_prev is not None:
            s, y = x - x_prev, pg - pg_prev
            sy = np.dot(weights * s, y)
            if sy > 0.0:
                eta = np.dot(weights * s, s) / sy
            else:
                eta *= 2.0
        slope = np.dot(weights * pg, pg)
        noise = 8.0 * _EPS * max(1.0, abs(f))
        for _ in range(80):
            trial = retract(x - eta * pg)
            if trial is not None:
                ft = fun(trial)
                if ft <= f - ARMIJO_C * eta * slope:
                    break
                if ARMIJO_C * eta * slope < noise and ft <= f + noise:
                    break
            eta *= SHRINK
        else:
            break
        x_prev, pg_prev = x, pg
        x, f = trial, ft
        pg = project(grad(x), con_grad(x), weights)
        gnorm = float(np.max(np.abs(pg)))
        it += 1
        if gnorm < best_gnorm:
            best_gnorm, since_best = gnorm, 0
        else:
            since_best += 1
    return DescentResult(x, f, it, gnorm, gnorm <= tol * max(1.0, abs(f)))
