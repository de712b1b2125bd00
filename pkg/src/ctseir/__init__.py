"""SEIR epidemics with digital contact tracing.

Timeline algebra for alert probabilities, a closed-form controllability
condition checked against eigenvalues, parameter sweeps, and deterministic
and stochastic simulators.
"""

from .distributions import (
    Exponential,
    GridDistribution,
    InvalidDistributionError,
    Normal,
    PointMass,
    diff_of,
    residual,
    sum_of,
    uniform,
)
from .seir import CompartmentState, EpidemicParams, IntegrationError, Trajectory, initial_state, integrate
from .stability import (
    ConsistencyError,
    StabilityReport,
    char_poly_coeffs,
    condition_c1,
    eigen_stability,
    jacobian_matrix,
    stability_report,
)
from .stochastic import StochasticRun, outbreak_frequency, simulate
from .sweep import Scenario, boundary_curve, controllability_grid, min_alpha_for_control, preset
from .tracing import (
    AlertProbabilities,
    ConfigurationError,
    DerivedRates,
    NumericalError,
    TimelineSpec,
    alert_probabilities,
    notification_time,
    removal_rates,
)

__all__ = [
    "AlertProbabilities", "CompartmentState", "ConfigurationError", "ConsistencyError", "DerivedRates",
    "EpidemicParams", "Exponential", "GridDistribution", "IntegrationError", "InvalidDistributionError",
    "Normal", "NumericalError", "PointMass", "Scenario", "StabilityReport", "StochasticRun", "TimelineSpec",
    "Trajectory", "alert_probabilities", "boundary_curve", "char_poly_coeffs", "condition_c1",
    "controllability_grid", "diff_of", "eigen_stability", "initial_state", "integrate", "jacobian_matrix",
    "min_alpha_for_control", "notification_time", "outbreak_frequency", "preset", "removal_rates",
    "residual", "simulate", "stability_report", "sum_of", "uniform",
]
