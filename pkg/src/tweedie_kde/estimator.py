"""Tweedie kernel estimator of a mixed density on [0, inf).

The estimate at zero is the empirical proportion of exact zeros; on the
positive half-line every observation contributes a kernel term, zeros
through the kernel's atom and positive observations through the kernel's
continuous part.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, DomainError
from .kernel import (
    DEFAULT_POLICY,
    derived_params,
    log_subdensity_matrix,
    validate_power,
)

__all__ = [
    "SemicontinuousSample",
    "EvaluationGrid",
    "DensityEstimate",
    "default_grid",
    "zero_mass_estimate",
    "evaluate",
    "evaluate_many",
    "evaluate_grid",
    "loo_evaluate",
]

# Largest (centers x observations) block evaluated at once, to bound memory.
_BLOCK_ELEMENTS = 1 << 22

# Values below this magnitude may optionally be snapped to an exact zero
# during ingestion (explicit opt-in; zeros are structural in this model).
_TINY = 1e-12


class SemicontinuousSample:
    """Ordered collection of nonnegative observations.

    Parameters
    ----------
    values : array_like
        Observations, all >= 0, at least one.
    round_tiny : bool
        If True, values with absolute magnitude below 1e-12 are replaced
        by exact zeros at ingestion.  Off by default: exact zeros carry
        structural meaning and silent thresholding would change them.
    """

    def __init__(self, values, round_tiny=False):
        arr = np.ascontiguousarray(values, dtype=float)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size < 1:
            raise DegenerateSample("sample must contain at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DomainError("sample values must be finite")
        if round_tiny:
            arr = arr.copy()
            arr[np.abs(arr) < _TINY] = 0.0
        if np.any(arr < 0.0):
            raise DomainError("sample values must be >= 0")
        self.values = arr
        self.positive = arr[arr > 0.0]

    @property
    def n(self):
        return self.values.size

    @property
    def n_zeros(self):
        return self.n - self.positive.size

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class EvaluationGrid:
    """Equally spaced positive grid points x_1 < ... < x_m."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 1:
            raise DomainError("grid must be a one-dimensional, nonempty array")
        if pts[0] <= 0.0:
            raise DomainError("grid points must be strictly positive")
        if pts.size > 1:
            steps = np.diff(pts)
            if np.any(steps <= 0.0):
                raise DomainError("grid points must be strictly increasing")
            dx = steps[0]
            if np.any(np.abs(steps - dx) > 1e-12 * max(dx, 1.0)):
                raise DomainError("grid points must be equally spaced")

    @property
    def spacing(self):
        if self.points.size > 1:
            return float(self.points[1] - self.points[0])
        return float(self.points[0])

    @property
    def size(self):
        return self.points.size


def default_grid(sample, size=512, span_factor=1.1):
    """Equally spaced grid of `size` points on (0, span_factor * max(X)].

    The first point sits at one spacing above zero, never at zero itself.
    """
    top = span_factor * float(np.max(sample.values))
    if top <= 0.0:
        raise DomainError("cannot build a grid for an all-zero sample")
    dx = top / size
    return EvaluationGrid(np.linspace(dx, top, size))


@dataclass(frozen=True)
class DensityEstimate:
    """Atom estimate plus positive-part values on an evaluation grid."""

    zero_mass: float
    grid: EvaluationGrid
    values: np.ndarray
    h: float
    p: float

    def __post_init__(self):
        if self.values.shape != self.grid.points.shape:
            raise DomainError("estimate values must match the grid shape")


def zero_mass_estimate(sample):
    """Empirical proportion of exact zeros (literal equality, no tolerance)."""
    return sample.n_zeros / sample.n


def evaluate_many(sample, xs, h, p, policy=DEFAULT_POLICY):
    """Estimator values at an array of positive evaluation points."""
    validate_power(p)
    if h <= 0.0:
        raise DomainError(f"bandwidth h must be > 0, got {h}")
    xs = np.ascontiguousarray(xs, dtype=float)
    if np.any(xs <= 0.0):
        raise DomainError("evaluation points must be > 0")
    lam, _, _ = derived_params(xs, h, p)
    out = sample.n_zeros * np.exp(np.negative(lam))
    pos = sample.positive
    if pos.size:
        block = max(1, _BLOCK_ELEMENTS // pos.size)
        for lo in range(0, xs.size, block):
            chunk = xs[lo : lo + block]
            logk = log_subdensity_matrix(pos, chunk, h, p, policy)
            out[lo : lo + block] += np.exp(logk).sum(axis=1)
    return out / sample.n


def evaluate(sample, x, h, p, policy=DEFAULT_POLICY):
    """Estimator value at a single positive evaluation point."""
    return float(evaluate_many(sample, np.array([x]), h, p, policy)[0])


def evaluate_grid(sample, grid, h, p, policy=DEFAULT_POLICY):
    """Estimator evaluated on an EvaluationGrid, with the exact atom estimate."""
    values = evaluate_many(sample, grid.points, h, p, policy)
    return DensityEstimate(
        zero_mass=zero_mass_estimate(sample),
        grid=grid,
        values=values,
        h=float(h),
        p=float(p),
    )


def _kernel_at(t, x, h, p, policy):
    """Kernel value K(t; x) for scalar arguments, atom included."""
    if t == 0.0:
        lam, _, _ = derived_params(np.array([x]), h, p)
        return float(np.exp(np.negative(lam))[0])
    logk = log_subdensity_matrix(
        np.array([t]), np.array([x]), h, p, policy
    )[0, 0]
    return math.exp(logk)


def loo_evaluate(sample, i, x, h, p, full_value=None, policy=DEFAULT_POLICY):
    """Leave-one-out estimate at x with observation i removed.

    Uses the identity n/(n-1) * g_hat(x) - K(X_i; x)/(n-1) instead of
    refitting; zero observations enter through the kernel atom.
    """
    n = sample.n
    if n < 2:
        raise DegenerateSample("leave-one-out requires at least two observations")
    if full_value is None:
        full_value = evaluate(sample, x, h, p, policy)
    k_i = _kernel_at(float(sample.values[i]), float(x), h, p, policy)
    # Exact cancellation can round to a tiny negative; the true value is >= 0.
    return max(0.0, (n * full_value - k_i) / (n - 1))
