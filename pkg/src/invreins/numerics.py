"""Quadrature helpers shared by the claim, filter and investment layers."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson


def adaptive_simpson(
    f, a: float, b: float, tol: float = 1e-12, max_depth: int = 30, min_depth: int = 4
) -> float:
    """Integrate a scalar function on [a, b] by recursive adaptive Simpson.

    ``tol`` is absolute, floored at 1e-14 relative to the local estimate so
    that large integrands cannot chase tolerances below machine precision.
    """
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        converged = abs(delta) <= 15.0 * max(tol, 1e-14 * abs(left + right)) and max_depth - depth >= min_depth
        if depth <= 0 or converged:
            return left + right + delta / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2.0, depth - 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, b - a)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)


def cumulative(y: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Running integral of sampled values, starting at 0 on grid[0] (Simpson)."""
    return cumulative_simpson(np.asarray(y, dtype=float), x=grid, initial=0.0)


def tail(y: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Running integral from each grid point to the last one."""
    c = cumulative(y, grid)
    return c[-1] - c
