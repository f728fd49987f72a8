"""Monte Carlo estimators for the contact process with stirring."""

from ._core import (
    EstimateReport,
    InvariantViolation,
    asymptotic_lower_bound,
    cli,
    coupled_summary,
    delta_max,
    event_e,
    event_e_probability,
    event_i,
    event_j,
    excursion_mean,
    extinction_criterion,
    green_constant_d3,
    green_origin_d3_quadrature,
    kappa_bound,
    kappa_ratio,
    lambda_c,
    local_time,
    local_time_slope,
    psi_mean,
    run_criterion,
    star_time,
    survival_probability,
    version,
)

__all__ = [
    "EstimateReport",
    "InvariantViolation",
    "asymptotic_lower_bound",
    "cli",
    "coupled_summary",
    "delta_max",
    "event_e",
    "event_e_probability",
    "event_i",
    "event_j",
    "excursion_mean",
    "extinction_criterion",
    "green_constant_d3",
    "green_origin_d3_quadrature",
    "kappa_bound",
    "kappa_ratio",
    "lambda_c",
    "local_time",
    "local_time_slope",
    "psi_mean",
    "run_criterion",
    "star_time",
    "survival_probability",
    "version",
]
