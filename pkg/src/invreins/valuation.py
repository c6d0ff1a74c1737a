"""Value functions, the indifference value of information and its tables."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from functools import cached_property

import numpy as np

from invreins.claims import ClaimSizeModel, Uniform
from invreins.core import ModelParams
from invreins.filtering import DEFAULT_STEPS, VarianceCurve, solve_riccati
from invreins.investment import PsiEvaluator, QuadraticPsi, gaussian_gap_constant, phi
from invreins.premium import PremiumPrinciple
from invreins.reinsurance import RetentionSchedule, build_retention_schedule

# Published values, (row key, T) -> delta zeta. Table 1 varies P0 at rho = 0,
# Table 2 varies rho at P0 = 0.
PUBLISHED_TABLE1 = {
    (0.0, 3.0): 0.6336, (0.0, 5.0): 1.5384, (0.0, 10.0): 4.0055,
    (0.01, 3.0): 0.6362, (0.01, 5.0): 1.5406, (0.01, 10.0): 4.0194,
    (0.03, 3.0): 0.6411, (0.03, 5.0): 1.5520, (0.03, 10.0): 4.0469,
}  # fmt: skip
PUBLISHED_TABLE2 = {
    (0.0, 3.0): 0.6336, (0.0, 5.0): 1.5348, (0.0, 10.0): 4.0055,
    (0.2, 3.0): 0.6308, (0.2, 5.0): 1.5103, (0.2, 10.0): 3.8999,
    (0.7, 3.0): 0.6206, (0.7, 5.0): 1.4487, (0.7, 10.0): 3.6589,
}  # fmt: skip
# The (P0 = 0, rho = 0, T = 5) cell is printed twice with different values.
CONFLICTING_CELL = {"p0": 0.0, "rho": 0.0, "T": 5.0, "values": (1.5384, 1.5348)}
TABLE_TOLERANCE = 5e-3


def round4(x: float) -> float:
    return float(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


@dataclass(eq=False)
class Solution:
    """Everything needed to evaluate value functions and strategies."""

    params: ModelParams
    claims: ClaimSizeModel
    premium: PremiumPrinciple
    curve: VarianceCurve

    @classmethod
    def build(
        cls,
        params: ModelParams,
        claims: ClaimSizeModel | None = None,
        premium: PremiumPrinciple | None = None,
        n_steps: int = DEFAULT_STEPS,
        curve: VarianceCurve | None = None,
    ) -> Solution:
        claims = claims or Uniform(2.0)
        premium = premium or PremiumPrinciple()
        curve = curve if curve is not None else solve_riccati(params, n_steps)
        return cls(params, claims, premium, curve)

    @cached_property
    def psi(self) -> PsiEvaluator:
        return PsiEvaluator(self.curve)

    @cached_property
    def retention(self) -> RetentionSchedule:
        return build_retention_schedule(self.params, self.claims, self.premium, self.curve.grid)

    def _wealth_factor(self, t, zeta):
        prm = self.params
        return np.exp(-prm.eta * np.asarray(zeta, dtype=float) * np.exp(prm.r * (prm.T - np.asarray(t, dtype=float))))

    def value_partial(self, t, zeta, p):
        """v(t, zeta, p) = exp(-eta zeta e^{r(T-t)}) h(t) exp(psi(t, p))."""
        return self._wealth_factor(t, zeta) * self.retention.h_at(t) * np.exp(self.psi.psi(t, p))

    def value_full(self, t, zeta, x):
        return self._wealth_factor(t, zeta) * self.retention.h_at(t) * np.exp(phi(t, x, self.params))

    @cached_property
    def quadratic_psi(self) -> QuadraticPsi:
        return QuadraticPsi(self.curve)

    def value_partial_quadratic(self, t, zeta, p):
        """Same ansatz with the exact quadratic solution of the investment PDE."""
        return self._wealth_factor(t, zeta) * self.retention.h_at(t) * np.exp(self.quadratic_psi.psi(t, p))

    def expected_utility(self, quadratic: bool = False) -> float:
        """Optimal expected utility 1 - v(0, R0, Pi0)."""
        prm = self.params
        value = self.value_partial_quadratic if quadratic else self.value_partial
        return 1.0 - float(value(0.0, prm.r0_capital, prm.pi0))


def indifference_value(params: ModelParams, curve: VarianceCurve | None = None) -> float:
    """Closed-form indifference value of information.

    (e^{-rT}/eta) (psi(0, Pi0) - phi(0, Pi0) - P0 C0^2 / 2), the Gaussian
    average of e^{phi(0, X0)} over X0 ~ N(Pi0, P0) being done analytically.
    """
    curve = curve if curve is not None else solve_riccati(params)
    psi0 = float(PsiEvaluator(curve).psi_grid(params.pi0)[0])
    c0 = gaussian_gap_constant(params)
    gap = psi0 - float(phi(0.0, params.pi0, params)) - 0.5 * params.p0 * c0**2
    return math.exp(-params.r * params.T) / params.eta * gap


def indifference_value_mc(
    params: ModelParams, curve: VarianceCurve | None = None, n_samples: int = 10**6, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo counterpart sampling X0 ~ N(Pi0, P0); returns (estimate, std error).

    The standard error of the log-mean comes from the delta method.
    """
    curve = curve if curve is not None else solve_riccati(params)
    psi0 = float(PsiEvaluator(curve).psi_grid(params.pi0)[0])
    scale = math.exp(-params.r * params.T) / params.eta
    if params.p0 == 0.0:
        # point mass at Pi0: nothing to sample
        return scale * (psi0 - float(phi(0.0, params.pi0, params))), 0.0
    rng = np.random.Generator(np.random.Philox(seed))
    x0 = params.pi0 + math.sqrt(params.p0) * rng.standard_normal(n_samples)
    w = np.exp(phi(0.0, x0, params))
    m = w.mean()
    se_log = w.std(ddof=1) / (math.sqrt(n_samples) * m)
    return scale * (psi0 - math.log(m)), scale * se_log


def log_mgf_gap_mc(params: ModelParams, n_samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """ln E[e^{phi(0, X0)}] - phi(0, Pi0) - P0 C0^2/2 by sampling, with its std error."""
    rng = np.random.Generator(np.random.Philox(seed))
    x0 = params.pi0 + math.sqrt(params.p0) * rng.standard_normal(n_samples)
    w = np.exp(phi(0.0, x0, params))
    m = w.mean()
    c0 = gaussian_gap_constant(params)
    gap = math.log(m) - float(phi(0.0, params.pi0, params)) - 0.5 * params.p0 * c0**2
    return gap, w.std(ddof=1) / (math.sqrt(n_samples) * m)


@dataclass
class TableCell:
    key: str  # "p0" or "rho"
    value: float
    T: float
    delta_zeta: float
    published: float | None = None
    flag: str = ""

    def record(self) -> dict:
        d = {self.key: self.value, "T": self.T, "delta_zeta": round4(self.delta_zeta)}
        if self.published is not None:
            d["published"] = self.published
            d["abs_diff"] = round4(abs(self.delta_zeta - self.published))
        if self.flag:
            d["flag"] = self.flag
        return d


def _published_lookup(key, value, T, p0, rho):
    if key == "p0" and rho == 0.0:
        return PUBLISHED_TABLE1.get((value, T))
    if key == "rho" and p0 == 0.0:
        return PUBLISHED_TABLE2.get((value, T))
    return None


def table_delta_zeta(
    key: str,
    values,
    t_list,
    params: ModelParams | None = None,
    n_steps: int = DEFAULT_STEPS,
    tolerance: float = TABLE_TOLERANCE,
) -> list[TableCell]:
    """Closed-form delta zeta over ``values`` of ``key`` ('p0' or 'rho') and horizons ``t_list``.

    Rows for 'p0' hold rho from ``params`` fixed; rows for 'rho' hold p0 fixed.
    Cells are compared with the published tables when the setting matches,
    and flagged when they disagree by more than the table tolerance.
    """
    if key not in ("p0", "rho"):
        raise ValueError("key must be 'p0' or 'rho'")
    base = params or ModelParams()
    cells = []
    for v in values:
        for T in t_list:
            prm = base.with_(**{key: float(v), "T": float(T)})
            dz = indifference_value(prm, solve_riccati(prm, n_steps))
            pub = _published_lookup(key, float(v), float(T), prm.p0, prm.rho)
            cell = TableCell(key, float(v), float(T), dz, pub)
            flags = []
            if pub is not None and abs(dz - pub) > tolerance:
                flags.append(f"disagrees with published {pub}")
            setting = (prm.p0, prm.rho, float(T))
            if setting == (CONFLICTING_CELL["p0"], CONFLICTING_CELL["rho"], CONFLICTING_CELL["T"]):
                a, b = CONFLICTING_CELL["values"]
                flags.append(f"published tables conflict for this cell ({a} vs {b})")
            cell.flag = "; ".join(flags)
            cells.append(cell)
    return cells


def cells_to_csv(cells: list[TableCell]) -> str:
    buf = io.StringIO()
    if not cells:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "delta_zeta"])
        return buf.getvalue()
    fields = [cells[0].key, "T", "delta_zeta", "published", "abs_diff", "flag"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for c in cells:
        w.writerow(c.record())
    return buf.getvalue()


def cells_to_json(cells: list[TableCell]) -> str:
    return json.dumps({"rows": [c.record() for c in cells]}, indent=2)
