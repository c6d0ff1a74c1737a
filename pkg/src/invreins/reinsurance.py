"""Optimal proportional retention and the time multiplier h(t).

With the exponential ansatz for the value function the reinsurance control
decouples from investment. At time t the insurer minimises

    H(t, u) = -(c - q(u)) * eta * e^{r(T-t)} + lam * (E[exp(eta u Z e^{r(T-t)})] - 1)

over u in [0, 1], and h(t) = exp(int_t^T min_u H(s, u) ds).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from invreins.claims import ClaimSizeModel
from invreins.core import ModelParams
from invreins.numerics import tail
from invreins.premium import EVP, PremiumPrinciple

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _tilt(t: float, params: ModelParams) -> float:
    return params.eta * math.exp(params.r * (params.T - t))


def hr_objective(t: float, u: float, params: ModelParams, model: ClaimSizeModel, pp: PremiumPrinciple) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"retention must lie in [0, 1], got {u}")
    k = _tilt(t, params)
    c = pp.insurance_rate(model, params.lam)
    q = pp.reinsurance_rate(model, params.lam, u)
    return -(c - q) * k + params.lam * (model.mgf(u * k) - 1.0)


def alpha_bar(t: float, params: ModelParams, model: ClaimSizeModel) -> float:
    """Loading above which buying reinsurance never pays (EVP)."""
    return model.exp_tilted_mean(_tilt(t, params)) / model.mean() - 1.0


def optimal_retention_evp(
    t: float, params: ModelParams, model: ClaimSizeModel, pp: PremiumPrinciple, tol: float = 1e-10
) -> float:
    """Root of E[Z e^{eta u Z e^{r(T-t)}}] = (1 + alpha_r) E[Z] by bisection, or 1."""
    if pp.kind != EVP:
        raise ValueError("closed-form retention requires the expected value principle")
    k = _tilt(t, params)
    target = (1.0 + pp.alpha_r) * model.mean()
    if model.exp_tilted_mean(k) <= target:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if model.exp_tilted_mean(mid * k) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def minimize_on_unit_interval(f, n_grid: int = 1001, tol: float = 1e-10) -> float:
    """Global minimiser of ``f`` on [0, 1]: grid scan, then golden section.

    Ties resolve to the smallest minimiser.
    """
    us = np.linspace(0.0, 1.0, n_grid)
    hs = np.array([f(u) for u in us])
    i = int(np.argmin(hs))
    lo, hi = us[max(i - 1, 0)], us[min(i + 1, n_grid - 1)]
    x1, x2 = hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    u_ref = 0.5 * (lo + hi)
    # keep the grid point unless refinement is a real improvement (tie-break)
    scale = 1e-13 * max(1.0, abs(hs[i]))
    if f(u_ref) < hs[i] - scale:
        return float(u_ref)
    return float(us[i])


def optimal_retention_generic(
    t: float,
    params: ModelParams,
    model: ClaimSizeModel,
    pp: PremiumPrinciple,
    n_grid: int = 1001,
    tol: float = 1e-10,
) -> float:
    return minimize_on_unit_interval(lambda u: hr_objective(t, u, params, model, pp), n_grid, tol)


def optimal_retention(t, params, model, pp) -> float:
    if pp.kind == EVP:
        return optimal_retention_evp(t, params, model, pp)
    return optimal_retention_generic(t, params, model, pp)


@dataclass(frozen=True, eq=False)
class RetentionSchedule:
    grid: np.ndarray
    u_star: np.ndarray
    alpha_bar: np.ndarray
    hr_min: np.ndarray
    h: np.ndarray

    def u_at(self, t):
        return np.interp(t, self.grid, self.u_star)

    def h_at(self, t):
        """h off the grid via log-linear interpolation (exact when H is constant)."""
        return np.exp(np.interp(t, self.grid, np.log(self.h)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "u_star", "alpha_bar", "h"])
        for row in zip(self.grid, self.u_star, self.alpha_bar, self.h):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def h_multiplier(grid: np.ndarray, hr_min: np.ndarray) -> np.ndarray:
    """h(t) = exp(int_t^T H(s, u*(s)) ds) on the grid; h(T) = 1 exactly."""
    h = np.exp(tail(hr_min, grid))
    h[-1] = 1.0
    return h


def build_retention_schedule(
    params: ModelParams, model: ClaimSizeModel, pp: PremiumPrinciple, grid: np.ndarray
) -> RetentionSchedule:
    grid = np.asarray(grid, dtype=float)
    cache: dict[float, tuple[float, float, float]] = {}
    u_star, abar, hmin = [], [], []
    for t in grid:
        # the problem depends on t only through the tilt e^{r(T-t)}
        key = _tilt(t, params)
        if key not in cache:
            u = optimal_retention(t, params, model, pp)
            cache[key] = (u, alpha_bar(t, params, model), hr_objective(t, u, params, model, pp))
        u, a, hm = cache[key]
        u_star.append(u)
        abar.append(a)
        hmin.append(hm)
    hmin = np.asarray(hmin)
    return RetentionSchedule(grid, np.asarray(u_star), np.asarray(abar), hmin, h_multiplier(grid, hmin))
