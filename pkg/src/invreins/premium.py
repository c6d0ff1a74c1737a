"""Insurance and reinsurance premium rates (expected-value and variance principles)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from invreins.claims import ClaimSizeModel

EVP = "EVP"
VP = "VP"


@dataclass(frozen=True)
class PremiumPrinciple:
    kind: str = EVP
    alpha_i: float = 0.2
    alpha_r: float = 0.3

    def __post_init__(self):
        if self.kind not in (EVP, VP):
            raise ValueError(f"premium kind must be 'EVP' or 'VP', got {self.kind!r}")
        if self.alpha_i < 0:
            raise ValueError("alpha_i must be nonnegative")
        if not self.alpha_r > self.alpha_i:
            raise ValueError(
                f"reinsurer loading must exceed insurer loading ({self.alpha_r} <= {self.alpha_i})"
            )

    def insurance_rate(self, model: ClaimSizeModel, lam: float) -> float:
        if self.kind == EVP:
            return (1.0 + self.alpha_i) * model.mean() * lam
        return model.mean() * lam + self.alpha_i * model.second_moment() * lam

    def reinsurance_rate(self, model: ClaimSizeModel, lam: float, u: float) -> float:
        """Premium rate paid to the reinsurer for retention ``u`` in [0, 1]."""
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"retention must lie in [0, 1], got {u}")
        ceded = 1.0 - u
        if self.kind == EVP:
            return (1.0 + self.alpha_r) * ceded * model.mean() * lam
        return ceded * model.mean() * lam + self.alpha_r * ceded**2 * model.second_moment() * lam

    def reinsurance_rate_slope(self, model: ClaimSizeModel, lam: float, u: float) -> float:
        """d q / d u."""
        if self.kind == EVP:
            return -(1.0 + self.alpha_r) * model.mean() * lam
        return -model.mean() * lam - 2.0 * self.alpha_r * (1.0 - u) * model.second_moment() * lam

    def to_dict(self) -> dict:
        return asdict(self)
