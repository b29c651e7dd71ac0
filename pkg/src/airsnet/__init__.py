"""Analysis and simulation of an amplifying-reflector aided single-cell network.

Two independent evaluation routes for the same system: closed-form/quadrature
analytics built on a mixture-Gamma channel model, and physical Monte-Carlo
simulation, cross-validated by the `validate` CLI experiment.
"""

from .analytic import (
    MetricResult,
    average_metric,
    mean_snr_closed,
    mean_snr_integral,
    mean_snr_passive,
    mean_snr_rayleigh,
    noise_laplace,
    rate_active,
    rate_direct,
    snr_moment_active,
    snr_moment_direct,
)
from .channel import FadingDraw, PowerParams
from .config import ExperimentConfig, GeometryConfig, NetworkConfig, parse_config
from .mathkit import QuadratureRule, exp_e1_scaled, gauss_laguerre, ln_gamma
from .mixgamma import LinkStats, MixtureGamma, cascaded_power_dist, direct_power_dist
from .simulate import NetworkRealization, SimEstimate, simulate_cell, sweep_density

__version__ = "0.1.0"

__all__ = [
    "MetricResult",
    "average_metric",
    "mean_snr_closed",
    "mean_snr_integral",
    "mean_snr_passive",
    "mean_snr_rayleigh",
    "noise_laplace",
    "rate_active",
    "rate_direct",
    "snr_moment_active",
    "snr_moment_direct",
    "FadingDraw",
    "PowerParams",
    "ExperimentConfig",
    "GeometryConfig",
    "NetworkConfig",
    "parse_config",
    "QuadratureRule",
    "exp_e1_scaled",
    "gauss_laguerre",
    "ln_gamma",
    "LinkStats",
    "MixtureGamma",
    "cascaded_power_dist",
    "direct_power_dist",
    "NetworkRealization",
    "SimEstimate",
    "simulate_cell",
    "sweep_density",
    "__version__",
]
