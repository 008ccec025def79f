"""Samplers for distributions supported on barrier-defined convex domains.

The package provides unadjusted and Metropolis-adjusted Langevin kernels whose
proposal geometry comes from the log-barrier Hessian of the domain (a
regularized Dikin ellipsoid), plus baselines, ground-truth oracles,
convergence diagnostics, and a CLI harness for running experiments.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    FactorizationFailure,
    NotInterior,
    OracleUnavailable,
    StepTooLarge,
    TuningFailed,
    ZeroVariance,
)
from .geometry import BallBarrier, MetricState, PolytopeBarrier, metric_state
from .targets import Target, bimodal_target, gaussian_box_target, standard_gaussian_target

__all__ = [
    "BallBarrier",
    "ConfigError",
    "DomainError",
    "FactorizationFailure",
    "MetricState",
    "NotInterior",
    "OracleUnavailable",
    "PolytopeBarrier",
    "StepTooLarge",
    "Target",
    "TuningFailed",
    "ZeroVariance",
    "bimodal_target",
    "gaussian_box_target",
    "metric_state",
    "standard_gaussian_target",
    "__version__",
]
