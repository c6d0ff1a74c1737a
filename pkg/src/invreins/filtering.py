"""Kalman-Bucy filter for the hidden market price of risk.

The conditional variance solves a deterministic Riccati ODE and is computed
once per parameter set; the conditional mean is propagated path by path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from invreins.core import ModelParams
from invreins.numerics import cumulative

DEFAULT_STEPS = 2000


def riccati_rhs(p, params: ModelParams):
    g = p + params.rho * params.sigma0
    return params.sigma0**2 - 2.0 * params.b0 * p - g * g


def stationary_variance(params: ModelParams) -> float:
    """Attracting root of the Riccati right-hand side."""
    k = params.kappa
    disc = k * k + params.sigma0**2 * (1.0 - params.rho**2)
    if disc < 0:
        raise ValueError("Riccati equation has no real stationary point")
    return -k + math.sqrt(disc)


@dataclass(frozen=True, eq=False)
class VarianceCurve:
    """Conditional variance P on a uniform grid with A(t) = int_0^t (b0 + P + rho sigma0)."""

    grid: np.ndarray
    p: np.ndarray
    a_cum: np.ndarray
    params: ModelParams

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1

    @property
    def p_bar(self) -> float:
        return float(self.p.max())

    @property
    def gain(self) -> np.ndarray:
        """Filter gain P_t + rho sigma0 on the grid."""
        return self.p + self.params.rho * self.params.sigma0

    @cached_property
    def _p_spline(self):
        return CubicSpline(self.grid, self.p)

    @cached_property
    def _a_spline(self):
        return CubicSpline(self.grid, self.a_cum)

    def p_at(self, t):
        return self._p_spline(t)

    def a_at(self, t):
        return self._a_spline(t)

    def index(self, t: float) -> int:
        i = round(t / self.dt)
        if abs(i * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the curve grid")
        if i < 0 or i > self.n_steps:
            raise ValueError(f"time {t} outside [0, {self.grid[-1]}]")
        return i

    @classmethod
    def zero(cls, params: ModelParams, n_steps: int = DEFAULT_STEPS) -> VarianceCurve:
        """Curve pinned to P = 0 (full information about the signal)."""
        grid = np.linspace(0.0, params.T, n_steps + 1)
        return cls(grid, np.zeros_like(grid), params.kappa * grid, params)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "P", "A"])
        for row in zip(self.grid, self.p, self.a_cum):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def solve_riccati(params: ModelParams, n_steps: int = DEFAULT_STEPS) -> VarianceCurve:
    """Classical RK4 on [0, T] from P0; A(t) by cumulative Simpson on the same grid."""
    if n_steps < 100:
        raise ValueError("n_steps must be at least 100")
    grid = np.linspace(0.0, params.T, n_steps + 1)
    h = grid[1] - grid[0]
    p = np.empty_like(grid)
    p[0] = params.p0
    f = lambda x: riccati_rhs(x, params)  # noqa: E731
    for i in range(n_steps):
        x = p[i]
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        p[i + 1] = max(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
    a_cum = cumulative(params.kappa + p, grid)
    return VarianceCurve(grid, p, a_cum, params)


@dataclass(frozen=True)
class FilterState:
    pi: float
    p: float
    t: float

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("conditional variance must be nonnegative")


def innovation_increment(x, pi, dw1, dt):
    """dI = dW1 + (X - Pi) dt; works elementwise on arrays."""
    return dw1 + (x - pi) * dt


def propagate_mean(state: FilterState, curve: VarianceCurve, dt: float, d_innov: float) -> FilterState:
    """One Euler-Maruyama step of dPi = b0 (mu0 - Pi) dt + (P + rho sigma0) dI."""
    if not math.isclose(dt, curve.dt, rel_tol=1e-9):
        raise ValueError(f"dt={dt} differs from the curve spacing {curve.dt}")
    i = curve.index(state.t)
    if i >= curve.n_steps:
        raise ValueError("cannot propagate beyond the horizon")
    prm = curve.params
    gain = curve.p[i] + prm.rho * prm.sigma0
    pi = state.pi + prm.b0 * (prm.mu0 - state.pi) * dt + gain * d_innov
    return FilterState(pi, float(curve.p[i + 1]), float(curve.grid[i + 1]))
