"""Tweedie kernel density estimation for semicontinuous data on [0, inf)."""

from . import asymptotics, errors, estimator, gof, kernel, scenarios, selection
from .estimator import (
    DensityEstimate,
    EvaluationGrid,
    SemicontinuousSample,
    default_grid,
    evaluate,
    evaluate_grid,
    zero_mass_estimate,
)
from .kernel import SeriesPolicy, TweedieKernelParams, kernel_eval, sample
from .selection import GridSpec, SelectionResult, default_grids, profile_select

__version__ = "0.1.0"

__all__ = [
    "DensityEstimate",
    "EvaluationGrid",
    "GridSpec",
    "SelectionResult",
    "SemicontinuousSample",
    "SeriesPolicy",
    "TweedieKernelParams",
    "asymptotics",
    "default_grid",
    "default_grids",
    "errors",
    "estimator",
    "evaluate",
    "evaluate_grid",
    "gof",
    "kernel",
    "kernel_eval",
    "profile_select",
    "sample",
    "scenarios",
    "selection",
    "zero_mass_estimate",
]
