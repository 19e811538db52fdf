"""Leading-order risk formulas, optimal bandwidths, and CLT normalization.

All quantities refer to the mixed-density estimator at interior points
x > 0: the leading bias is h * x**p * g''(x) / 2, the leading variance is
g(x) / (2 * sqrt(pi) * x**(p/2)) * n**-1 * h**-0.5, and the optimal
bandwidths follow from minimizing the resulting MSE/MISE expressions.
These closed forms serve as oracles and diagnostics for known targets.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import (
    DegenerateCurvature,
    DivergentFunctional,
    DomainError,
    MissingDerivative,
)
from .kernel import validate_power

__all__ = [
    "TargetDensity",
    "RiskReport",
    "bias_leading",
    "variance_leading",
    "mse_leading",
    "h_opt_pointwise",
    "optimal_mse",
    "mise_functionals",
    "mise_leading",
    "h_opt_mise",
    "optimal_mise",
    "risk_report",
    "clt_params",
]

_FD_STEP_FACTOR = 1e-4
_MASS_TOLERANCE = 1e-6


@dataclass
class TargetDensity:
    """Positive-part target g_plus with zero mass p0 and optional curvature.

    g_plus maps (0, inf) to [0, inf) and integrates to 1 - p0.  When
    g_second is absent, curvature is obtained by central finite
    differences with step 1e-4 * x (accuracy limited to roughly 1e-7
    relative for smooth targets); set allow_finite_difference=False to
    make a missing derivative an error instead.
    """

    g_plus: callable
    p0: float
    g_second: callable = None
    allow_finite_difference: bool = True
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise DomainError(f"p0 must lie in [0, 1], got {self.p0}")

    def validate_mass(self):
        """Check by quadrature that g_plus integrates to 1 - p0."""
        total = self.mass_within(math.inf)
        if abs(total - (1.0 - self.p0)) > _MASS_TOLERANCE:
            raise DomainError(
                f"positive part integrates to {total:.8f}, "
                f"expected {1.0 - self.p0:.8f}"
            )
        return total

    def density(self, x):
        return self.g_plus(x)

    def curvature(self, x):
        """Second derivative of the positive part at x > 0."""
        if x <= 0.0:
            raise DomainError(f"curvature requires x > 0, got {x}")
        if self.g_second is not None:
            return float(self.g_second(x))
        if not self.allow_finite_difference:
            raise MissingDerivative(
                "no second derivative available and finite differences disabled"
            )
        step = _FD_STEP_FACTOR * x
        g = self.g_plus
        return float(
            (g(x + step) - 2.0 * g(x) + g(x - step)) / (step * step)
        )

    def mode(self):
        """Location of the positive-part maximum, found numerically."""
        cached = self._cache.get("mode")
        if cached is not None:
            return cached
        hi = 10.0
        best = 0.0
        for _ in range(40):
            xs = np.geomspace(1e-9, hi, 2048)
            vals = np.asarray(self.g_plus(xs), dtype=float)
            best = float(np.max(vals))
            if best > 0.0 and vals[-1] < 1e-12 * best:
                break
            hi *= 4.0
        if best == 0.0:  # identically zero positive part (all mass at zero)
            self._cache["mode"] = 1.0
            return 1.0
        x0 = float(xs[int(np.argmax(vals))])
        res = optimize.minimize_scalar(
            lambda u: -float(self.g_plus(u)),
            bounds=(x0 / 2.0, x0 * 2.0),
            method="bounded",
        )
        mode = float(res.x)
        self._cache["mode"] = mode
        return mode

    def mass_within(self, xmax):
        """Integral of g_plus over (0, min(xmax, inf)), split at the mode."""
        key = ("mass", xmax)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        val = _split_quad(self.g_plus, self.mode(), xmax)
        self._cache[key] = val
        return val

    def quantile_positive(self, frac):
        """q with integral of g_plus over (0, q] equal to frac * (1 - p0)."""
        if not 0.0 < frac < 1.0:
            raise DomainError(f"fraction must lie in (0, 1), got {frac}")
        total = self.mass_within(math.inf)
        goal = frac * total
        hi = self.mode() + 1.0
        while self.mass_within(hi) < goal:
            hi *= 2.0
            if hi > 1e12:
                raise DivergentFunctional("positive-part quantile out of range")
        return optimize.brentq(
            lambda q: self.mass_within(q) - goal, 1e-12, hi, xtol=1e-10
        )


def _split_quad(fn, split, upper=math.inf, epsrel=1e-8):
    """Adaptive quadrature over (0, upper), split at an interior point."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if upper <= split:
                val, _ = integrate.quad(
                    fn, 0.0, upper, epsabs=1e-14, epsrel=epsrel, limit=200
                )
                return val
            lo, _ = integrate.quad(
                fn, 0.0, split, epsabs=1e-14, epsrel=epsrel, limit=200
            )
            hi, _ = integrate.quad(
                fn, split, upper, epsabs=1e-14, epsrel=epsrel, limit=200
            )
        except integrate.IntegrationWarning as exc:
            raise DivergentFunctional(f"quadrature did not converge: {exc}")
    val = lo + hi
    if not np.isfinite(val):
        raise DivergentFunctional("quadrature produced a non-finite value")
    return val


def bias_leading(x, h, p, target):
    """Leading bias h * x**p * g''(x) / 2 of the estimator at x > 0."""
    validate_power(p)
    if x <= 0.0:
        raise DomainError(f"bias formula requires x > 0, got {x}")
    return 0.5 * h * x**p * target.curvature(x)


def variance_leading(x, h, n, p, target):
    """Leading variance g(x) / (2 sqrt(pi) x**(p/2)) / (n sqrt(h))."""
    validate_power(p)
    if x <= 0.0:
        raise DomainError(f"variance formula requires x > 0, got {x}")
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    g = float(target.g_plus(x))
    return g / (2.0 * math.sqrt(math.pi) * x ** (p / 2.0)) / (n * math.sqrt(h))


def mse_leading(x, h, n, p, target):
    """Leading mean squared error: squared bias plus leading variance."""
    b = bias_leading(x, h, p, target)
    return b * b + variance_leading(x, h, n, p, target)


def h_opt_pointwise(x, p, target, n):
    """Pointwise MSE-optimal bandwidth; requires nonzero curvature."""
    validate_power(p)
    gpp = target.curvature(x)
    if gpp == 0.0:
        raise DegenerateCurvature(f"g'' vanishes at x={x}; h_opt undefined")
    g = float(target.g_plus(x))
    base = g / (2.0 * math.sqrt(math.pi) * x ** (2.5 * p) * gpp * gpp)
    return base**0.4 * n ** (-0.4)


def optimal_mse(x, p, target, n):
    """Value of the leading MSE at the pointwise optimal bandwidth."""
    validate_power(p)
    gpp = target.curvature(x)
    if gpp == 0.0:
        raise DegenerateCurvature(f"g'' vanishes at x={x}; optimum undefined")
    g = float(target.g_plus(x))
    const = (g**4 * gpp * gpp / (16.0 * math.pi**2)) ** 0.2
    return 1.25 * const * n ** (-0.8)


def mise_functionals(p, target, epsrel=1e-8):
    """Curvature and variance-weight functionals of the integrated risk.

    Returns (R, S) with R the integral of x**(2p) g''(x)**2 and S the
    integral of x**(-p/2) g(x) over (0, inf).  Divergent integrals raise
    DivergentFunctional.
    """
    validate_power(p)
    mode = target.mode()
    r_val = _split_quad(
        lambda u: u ** (2.0 * p) * target.curvature(u) ** 2, mode, epsrel=epsrel
    )
    s_val = _split_quad(
        lambda u: u ** (-p / 2.0) * float(target.g_plus(u)), mode, epsrel=epsrel
    )
    return r_val, s_val


def mise_leading(h, n, p, target, functionals=None):
    """Leading integrated risk h**2 R / 4 + S / (2 sqrt(pi) n sqrt(h))."""
    r_val, s_val = functionals if functionals else mise_functionals(p, target)
    return 0.25 * h * h * r_val + s_val / (
        2.0 * math.sqrt(math.pi) * n * math.sqrt(h)
    )


def h_opt_mise(p, target, n, functionals=None):
    """MISE-optimal bandwidth {S / (2 sqrt(pi) R)}**(2/5) n**(-2/5)."""
    r_val, s_val = functionals if functionals else mise_functionals(p, target)
    if r_val == 0.0:
        raise DegenerateCurvature("curvature functional vanishes; h_opt undefined")
    return (s_val / (2.0 * math.sqrt(math.pi) * r_val)) ** 0.4 * n ** (-0.4)


def optimal_mise(p, target, n, functionals=None):
    """Value of the leading MISE at the optimal bandwidth."""
    r_val, s_val = functionals if functionals else mise_functionals(p, target)
    if r_val == 0.0:
        raise DegenerateCurvature("curvature functional vanishes; optimum undefined")
    return 1.25 * (r_val * s_val**4 / (16.0 * math.pi**2)) ** 0.2 * n ** (-0.8)


@dataclass(frozen=True)
class RiskReport:
    """Pointwise leading-risk summary at a fixed location."""

    bias_leading: float
    variance_leading: float
    mse_leading: float
    h_opt: float
    mse_at_opt: float


def risk_report(x, h, n, p, target):
    """Assemble the pointwise risk summary at (x, h, n, p)."""
    return RiskReport(
        bias_leading=bias_leading(x, h, p, target),
        variance_leading=variance_leading(x, h, n, p, target),
        mse_leading=mse_leading(x, h, n, p, target),
        h_opt=h_opt_pointwise(x, p, target, n),
        mse_at_opt=optimal_mse(x, p, target, n),
    )


def clt_params(x, h, n, p, target, lambda_limit=0.0):
    """Limiting normal parameters of sqrt(n) h**(1/4) (g_hat - g) at x.

    The mean shift is x**p g''(x) sqrt(lambda_limit) / 2 and the variance
    is g(x) / (2 sqrt(pi) x**(p/2)); lambda_limit is the limit of
    n h**(5/2).
    """
    validate_power(p)
    if x <= 0.0:
        raise DomainError(f"CLT normalization requires x > 0, got {x}")
    if lambda_limit < 0.0:
        raise DomainError("lambda_limit must be >= 0")
    if lambda_limit > 0.0:
        shift = 0.5 * x**p * target.curvature(x) * math.sqrt(lambda_limit)
    else:
        shift = 0.0
    g = float(target.g_plus(x))
    var = g / (2.0 * math.sqrt(math.pi) * x ** (p / 2.0))
    return shift, var
