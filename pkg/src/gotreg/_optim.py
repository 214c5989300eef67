"""Multi-start Nelder-Mead on a symmetric box ``[-A, A]^k``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


def reflect_into_box(x, bound):
    """Fold ``x`` into ``[-bound, bound]`` by mirror reflection at the faces."""
    period = 4.0 * bound
    y = np.mod(np.asarray(x, dtype=float) + bound, period)
    y = np.where(y > 2.0 * bound, period - y, y)
    return y - bound


@dataclass
class BoxResult:
    x: np.ndarray
    fun: float
    converged: bool
    nfev: int
    start_index: int


def grid_starts(fun, dim, grid, max_starts):
    """Cross-product grid points ordered by objective value (stable), capped."""
    points = np.array(list(itertools.product(grid, repeat=dim)), dtype=float).reshape(-1, dim)
    values = np.array([fun(p) for p in points])
    order = np.argsort(values, kind="stable")[:max_starts]
    return points[order], len(points)


def minimize_box(fun, starts, bound, xatol=1e-6, max_iter=500, step=0.1):
    """Run Nelder-Mead from every start; keep the first strictly best result.

    Iterates are reflected into the box before each evaluation, so the
    search never leaves ``[-bound, bound]^k``.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    dim = starts.shape[1]
    best = None
    total = 0

    def wrapped(z):
        return fun(reflect_into_box(z, bound))

    for idx, x0 in enumerate(starts):
        x0 = reflect_into_box(x0, bound)
        simplex = np.vstack([x0, x0 + step * np.eye(dim)])
        res = minimize(
            wrapped,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": xatol,
                "fatol": xatol,
                "maxiter": max_iter,
                "initial_simplex": simplex,
            },
        )
        total += res.nfev
        x = reflect_into_box(res.x, bound)
        val = float(res.fun)
        if best is None or val < best.fun:
            best = BoxResult(x, val, bool(res.success), 0, idx)
    best.nfev = total
    return best
