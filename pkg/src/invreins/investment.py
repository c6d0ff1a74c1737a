"""Closed-form investment layer: psi, phi and the optimal stock holdings."""

from __future__ import annotations

import csv
import io
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from invreins.core import ModelParams
from invreins.filtering import VarianceCurve
from invreins.numerics import tail


def _decay_integrals(kappa, tau):
    """(int_0^tau e^{-kappa s} ds, int_0^tau int_0^s e^{-kappa v} dv ds)."""
    tau = np.asarray(tau, dtype=float)
    x = kappa * tau
    if abs(kappa) < 1e-8:
        return tau, 0.5 * tau**2
    e1 = -np.expm1(-x) / kappa
    e2 = (tau - e1) / kappa
    return e1, e2


def phi(t, x, params: ModelParams):
    """Full-information log-value correction phi(t, x)."""
    tau = params.T - np.asarray(t, dtype=float)
    e1, e2 = _decay_integrals(params.kappa, tau)
    # equivalent to -(b0 mu0/(2k))(T-t) - (x - b0 mu0/k)(1 - e^{-k(T-t)})/(2k)
    return -0.5 * params.b0 * params.mu0 * e2 - 0.5 * np.asarray(x, dtype=float) * e1


def phi_slope(t, params: ModelParams):
    """d phi / d x, i.e. -C(t) with C(0) the constant of the Gaussian correction."""
    e1, _ = _decay_integrals(params.kappa, params.T - np.asarray(t, dtype=float))
    return -0.5 * e1


def theta_star_full(t, x, params: ModelParams):
    """Optimal holding when the market price of risk is observed."""
    tau = params.T - np.asarray(t, dtype=float)
    scale = np.exp(-params.r * tau) / (params.sigma1 * params.eta)
    e1, _ = _decay_integrals(params.kappa, tau)
    hedge = -0.5 * params.rho * params.sigma0 * e1
    return scale * (np.asarray(x, dtype=float) + hedge)


class PsiEvaluator:
    """Evaluates psi(t, p) = -1/2 [p D(t) + b0 mu0 F(t)] from a variance curve.

    D(t) = int_t^T e^{-(A(s) - A(t))} ds and F(t) = int_t^T D(v) dv are
    accumulated once on the curve grid in O(N); values off the grid come from
    cubic splines of D and F.
    """

    def __init__(self, curve: VarianceCurve):
        self.curve = curve
        self.params = curve.params
        grid, a = curve.grid, curve.a_cum
        # shift by A(T) keeps e^{A - A(T)} <= 1
        shift = a[-1]
        k_tail = tail(np.exp(-(a - shift)), grid)
        self.d = np.exp(a - shift) * k_tail
        self.d[-1] = 0.0
        self.f = tail(self.d, grid)
        self.f[-1] = 0.0

    @cached_property
    def _d_spline(self):
        return CubicSpline(self.curve.grid, self.d)

    @cached_property
    def _f_spline(self):
        return CubicSpline(self.curve.grid, self.f)

    def d_at(self, t):
        return self._d_spline(t)

    def f_at(self, t):
        return self._f_spline(t)

    def psi(self, t, p):
        t = np.asarray(t, dtype=float)
        out = -0.5 * (np.asarray(p, dtype=float) * self.d_at(t) + self.params.b0 * self.params.mu0 * self.f_at(t))
        return np.where(t >= self.params.T, 0.0, out)

    def psi_grid(self, p):
        """psi on the curve grid (no interpolation)."""
        return -0.5 * (np.asarray(p, dtype=float) * self.d + self.params.b0 * self.params.mu0 * self.f)

    def theta_parts(self, t):
        """(myopic coefficient, hedging term) so that theta* = coef * (pi + hedge)."""
        prm = self.params
        t = np.asarray(t, dtype=float)
        coef = np.exp(-prm.r * (prm.T - t)) / (prm.sigma1 * prm.eta)
        gain = self.curve.p_at(t) + prm.rho * prm.sigma0
        return coef, -0.5 * gain * self.d_at(t)

    def theta_parts_grid(self):
        prm = self.params
        coef = np.exp(-prm.r * (prm.T - self.curve.grid)) / (prm.sigma1 * prm.eta)
        return coef, -0.5 * self.curve.gain * self.d

    def theta_star(self, t, pi):
        coef, hedge = self.theta_parts(t)
        return coef * (np.asarray(pi, dtype=float) + hedge)

    def strategy_csv(self, pi_path) -> str:
        """Columns t, theta_myopic, theta_hedge, theta_star along a filter path."""
        coef, hedge = self.theta_parts_grid()
        pi_path = np.asarray(pi_path, dtype=float)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "theta_myopic", "theta_hedge", "theta_star"])
        for t, c, h, p in zip(self.curve.grid, coef, hedge, pi_path):
            w.writerow([repr(float(t)), repr(float(c * p)), repr(float(c * h)), repr(float(c * (p + h)))])
        return buf.getvalue()

    def pde_residual(self, t: float, p: float, step: float = 1e-4) -> float:
        """Residual of psi_t + [b0(mu0 - p) - p g] psi_p + g^2/2 psi_pp - p^2/2 by central differences."""
        return pde_residual(self.psi, lambda s: self.curve.p_at(s), self.params, t, p, step)


def pde_residual(fn, p_curve, params: ModelParams, t: float, p: float, step: float = 1e-4) -> float:
    """Finite-difference residual of the separated investment PDE for ``fn(t, p)``.

    ``p_curve(t)`` returns the conditional variance at time t.
    """
    ht = hp = step
    f0 = float(fn(t, p))
    f_t = (float(fn(t + ht, p)) - float(fn(t - ht, p))) / (2.0 * ht)
    fp, fm = float(fn(t, p + hp)), float(fn(t, p - hp))
    f_p = (fp - fm) / (2.0 * hp)
    f_pp = (fp - 2.0 * f0 + fm) / hp**2
    g = float(p_curve(t)) + params.rho * params.sigma0
    drift = params.b0 * (params.mu0 - p) - p * g
    return f_t + drift * f_p + 0.5 * g * g * f_pp - 0.5 * p * p


def psi_pde_residual(t: float, p: float, curve: VarianceCurve, step: float = 1e-4) -> float:
    return PsiEvaluator(curve).pde_residual(t, p, step)


def gaussian_gap_constant(params: ModelParams) -> float:
    """C0 = (1 - e^{-(b0 + rho sigma0) T}) / (2 (b0 + rho sigma0))."""
    return float(-phi_slope(0.0, params))


__all__ = [
    "PsiEvaluator",
    "phi",
    "phi_slope",
    "theta_star_full",
    "pde_residual",
    "psi_pde_residual",
    "gaussian_gap_constant",
    "QuadraticPsi",
]


class QuadraticPsi:
    """Exact solution of the separated investment PDE with its -p^2/2 source.

    Writes psi(t, p) = c2(t) p^2 + c1(t) p + c0(t) and integrates the linear
    coefficient ODEs backward from zero at T with RK4:

        c2' = 2 a c2 + 1/2,   c1' = a c1 - 2 b0 mu0 c2,   c0' = -b0 mu0 c1 - g^2 c2

    with a = b0 + g and g = P + rho sigma0. ``PsiEvaluator`` solves the same
    equation with a linear source -p/2 instead, and is what the closed-form
    strategy and indifference value in this package use.
    """

    def __init__(self, curve: VarianceCurve):
        self.curve = curve
        self.params = prm = curve.params
        grid = curve.grid
        n = len(grid) - 1
        h = curve.dt
        gain = lambda s: curve.p_at(s) + prm.rho * prm.sigma0  # noqa: E731
        bm = prm.b0 * prm.mu0

        def rhs(s, c):
            g = float(gain(s))
            a = prm.b0 + g
            return np.array([2.0 * a * c[0] + 0.5, a * c[1] - 2.0 * bm * c[0], -bm * c[1] - g * g * c[0]])

        coeffs = np.zeros((n + 1, 3))
        c = np.zeros(3)
        for i in range(n, 0, -1):
            s = grid[i]
            k1 = rhs(s, c)
            k2 = rhs(s - 0.5 * h, c - 0.5 * h * k1)
            k3 = rhs(s - 0.5 * h, c - 0.5 * h * k2)
            k4 = rhs(s - h, c - h * k3)
            c = c - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            coeffs[i - 1] = c
        self.coeffs = coeffs
        self._splines = [CubicSpline(grid, coeffs[:, j]) for j in range(3)]

    def coefficients(self, t):
        return tuple(s(t) for s in self._splines)

    def psi(self, t, p):
        c2, c1, c0 = self.coefficients(t)
        p = np.asarray(p, dtype=float)
        return c2 * p * p + c1 * p + c0

    def theta_star(self, t, pi):
        """Holding from the first-order condition, coef * (pi + g dpsi/dp)."""
        prm = self.params
        c2, c1, _ = self.coefficients(t)
        pi = np.asarray(pi, dtype=float)
        g = self.curve.p_at(t) + prm.rho * prm.sigma0
        coef = np.exp(-prm.r * (prm.T - np.asarray(t, dtype=float))) / (prm.sigma1 * prm.eta)
        return coef * (pi + g * (2.0 * c2 * pi + c1))

    def pde_residual(self, t: float, p: float, step: float = 1e-4) -> float:
        return pde_residual(self.psi, lambda s: self.curve.p_at(s), self.params, t, p, step)
