"""Model parameters and the explicit well-posedness / admissibility bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace


class ParameterError(ValueError):
    """Raised when a parameter set violates a structural constraint."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class ModelParams:
    """Market, insurance and preference parameters.

    Defaults reproduce the numerical study (b0=1, mu0=0.4, sigma0=0.18,
    sigma1=0.2, pi0=0.4, p0=0.03, T=10, r=0, eta=0.5) with rho=0.
    ``lam``, ``r0_capital`` and ``s0`` are not fixed by the study and are
    plain configuration.
    """

    b0: float = 1.0
    mu0: float = 0.4
    sigma0: float = 0.18
    sigma1: float = 0.2
    rho: float = 0.0
    r: float = 0.0
    pi0: float = 0.4
    p0: float = 0.03
    T: float = 10.0
    eta: float = 0.5
    lam: float = 1.0
    r0_capital: float = 1.0
    s0: float = 1.0
    epsilon: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ParameterError(f.name, f"must be a finite number, got {v!r}")
        for name in ("b0", "sigma1", "T", "eta", "lam", "s0", "epsilon"):
            if getattr(self, name) <= 0:
                raise ParameterError(name, "must be strictly positive")
        # sigma0 = 0 is allowed: it is the degenerate no-noise signal used in checks
        if self.sigma0 < 0:
            raise ParameterError("sigma0", "must be nonnegative")
        if self.p0 < 0:
            raise ParameterError("p0", "must be nonnegative")
        if self.r < 0:
            raise ParameterError("r", "must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError("rho", f"must lie in [-1, 1], got {self.rho}")

    @property
    def kappa(self) -> float:
        """Mean-reversion rate of the full-information signal, b0 + rho*sigma0."""
        return self.b0 + self.rho * self.sigma0

    @property
    def admissibility_constant(self) -> float:
        return 16.0 * (1.0 + self.epsilon) ** 2 * math.exp(2.0 * self.r * self.T)

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ValidationReport:
    novikov_ok: bool
    novikov_lhs: float
    novikov_rhs: float
    admissibility_ok: bool
    admissibility_lhs: float
    admissibility_rhs: float
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.novikov_ok and self.admissibility_ok

    def lines(self) -> list[str]:
        out = [
            f"novikov        : {'ok' if self.novikov_ok else 'FAIL'}  "
            f"lhs={self.novikov_lhs:.6g}  rhs={self.novikov_rhs:.6g}",
            f"admissibility  : {'ok' if self.admissibility_ok else 'FAIL'}  "
            f"lhs={self.admissibility_lhs:.6g}  rhs={self.admissibility_rhs:.6g}",
        ]
        return out + [f"  - {m}" for m in self.messages]


def check_novikov(params: ModelParams) -> tuple[bool, float, float]:
    """Sufficient condition P0 + sigma0^2/(2 b0) < 1/T for the Novikov bound."""
    lhs = params.p0 + params.sigma0**2 / (2.0 * params.b0)
    rhs = 1.0 / params.T
    return lhs < rhs, lhs, rhs


def check_strategy_admissibility(params: ModelParams, p_bar: float) -> tuple[bool, float, float]:
    """Sufficient condition (p_bar + rho sigma0)^2 / (b0 + rho sigma0) < 1/(T K).

    ``p_bar`` is the supremum of the conditional variance over [0, T].
    Raises ``ValueError`` when b0 + rho sigma0 <= 0, where the bound says nothing.
    """
    kappa = params.kappa
    if kappa <= 0:
        raise ValueError(f"admissibility bound inapplicable: b0 + rho*sigma0 = {kappa:.6g} <= 0")
    lhs = (p_bar + params.rho * params.sigma0) ** 2 / kappa
    rhs = 1.0 / (params.T * params.admissibility_constant)
    return lhs < rhs, lhs, rhs


def validate(params: ModelParams, p_bar: float | None = None) -> ValidationReport:
    """Run both parameter checks; never raises, findings go to ``messages``.

    When ``p_bar`` is omitted the Riccati curve is solved to obtain it.
    """
    nov_ok, nov_lhs, nov_rhs = check_novikov(params)
    messages = []
    if not nov_ok:
        messages.append(
            "Novikov sufficient condition fails: absence of arbitrage is not guaranteed"
        )
    if p_bar is None:
        from invreins.filtering import solve_riccati

        p_bar = solve_riccati(params).p_bar
    try:
        adm_ok, adm_lhs, adm_rhs = check_strategy_admissibility(params, p_bar)
        if not adm_ok:
            messages.append(
                "admissibility sufficient condition fails: the closed-form strategy "
                "is still computed but its optimality is unproven"
            )
    except ValueError as exc:
        adm_ok, adm_lhs, adm_rhs = False, math.nan, math.nan
        messages.append(str(exc))
    return ValidationReport(nov_ok, nov_lhs, nov_rhs, adm_ok, adm_lhs, adm_rhs, messages)
