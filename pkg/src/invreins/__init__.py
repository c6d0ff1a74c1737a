"""Optimal investment and proportional reinsurance under a hidden,
mean-reverting market price of risk (Kalman-Bucy filtered)."""

from invreins.claims import ClaimStream, Deterministic, TruncatedExponential, Uniform, sample_stream
from invreins.core import ModelParams, ValidationReport, check_novikov, check_strategy_admissibility, validate
from invreins.filtering import FilterState, VarianceCurve, solve_riccati, stationary_variance
from invreins.investment import PsiEvaluator, phi, theta_star_full
from invreins.premium import PremiumPrinciple
from invreins.reinsurance import RetentionSchedule, build_retention_schedule
from invreins.valuation import Solution, indifference_value, indifference_value_mc, table_delta_zeta

__all__ = [
    "ModelParams",
    "ValidationReport",
    "check_novikov",
    "check_strategy_admissibility",
    "validate",
    "ClaimStream",
    "Deterministic",
    "Uniform",
    "TruncatedExponential",
    "sample_stream",
    "PremiumPrinciple",
    "FilterState",
    "VarianceCurve",
    "solve_riccati",
    "stationary_variance",
    "RetentionSchedule",
    "build_retention_schedule",
    "PsiEvaluator",
    "phi",
    "theta_star_full",
    "Solution",
    "indifference_value",
    "indifference_value_mc",
    "table_delta_zeta",
]

__version__ = "0.1.0"
