"""Simulation, two-stage maximum-likelihood fitting and residual analysis of
multivariate exponential Hawkes processes, with day-gap and Bowsher variants."""
from .core import (
    BowsherParams,
    EventSeries,
    ExpHawkesParams,
    FitResult,
    HawkesError,
    InfeasibleLikelihoodError,
    TradingCalendar,
    UnstableParamsError,
    branching_matrix,
    compensator_at,
    intensity_at,
    stability_check,
)
from .gof import interarrival_stats, ks_exp1, qq_points, rescale_times
from .likelihood import nll, nll_bowsher, nll_daygap, nll_gradient, nll_hessian
from .optimize import OptimConfig, fit_2shlo, fit_bowsher, inner_minimize
from .simulate import SimConfig, simulate_bowsher, simulate_daygap, simulate_hawkes

__version__ = "0.1.0"

__all__ = [
    "BowsherParams", "EventSeries", "ExpHawkesParams", "FitResult", "HawkesError",
    "InfeasibleLikelihoodError", "TradingCalendar", "UnstableParamsError", "branching_matrix",
    "compensator_at", "intensity_at", "stability_check", "interarrival_stats", "ks_exp1",
    "qq_points", "rescale_times", "nll", "nll_bowsher", "nll_daygap", "nll_gradient",
    "nll_hessian", "OptimConfig", "fit_2shlo", "fit_bowsher", "inner_minimize", "SimConfig",
    "simulate_bowsher", "simulate_daygap", "simulate_hawkes",
]
