"""Tweedie compound Poisson-Gamma kernel: exact evaluation and sampling.

For a power parameter p in (1, 2), the kernel with center x > 0 and
bandwidth (dispersion) h > 0 is a mixed law on [0, inf): an atom at zero
of size exp(-lam) and an absolutely continuous part on (0, inf) given by
an infinite Poisson-weighted Gamma mixture with

    lam  = x**(2-p) / (h * (2-p))
    alpha = (2-p) / (p-1)
    beta = h * (p-1) * x**(p-1)

The kernel mean is x and its variance is h * x**p.  At x = 0 the law
degenerates to a point mass at zero.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive

from ._series import log_series_sum
from .errors import DomainError

__all__ = [
    "SeriesPolicy",
    "TweedieKernelParams",
    "KernelValue",
    "validate_power",
    "power_alpha",
    "derived_params",
    "point_mass",
    "log_subdensity",
    "log_subdensity_matrix",
    "subdensity",
    "wright_series",
    "log_wright_series",
    "kernel_eval",
    "unit_deviance",
    "saddlepoint_subdensity",
    "gaussian_local_subdensity",
    "bessel_subdensity_half",
    "sample",
    "dispersion_from_zero_mass",
]


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation policy for the infinite kernel series."""

    cutoff: float = 1e-15
    max_index: int = 10**6

    def __post_init__(self):
        if not 0.0 < self.cutoff < 1.0:
            raise DomainError(f"cutoff must be in (0, 1), got {self.cutoff}")
        if self.max_index < 1:
            raise DomainError(f"max_index must be >= 1, got {self.max_index}")


DEFAULT_POLICY = SeriesPolicy()


def validate_power(p):
    """Require p strictly inside (1, 2)."""
    p = float(p)
    if not 1.0 < p < 2.0:
        raise DomainError(f"power parameter must lie in (1, 2), got {p}")
    return p


def power_alpha(p):
    """Gamma-shape increment alpha = (2-p)/(p-1) of the series."""
    p = validate_power(p)
    return (2.0 - p) / (p - 1.0)


@dataclass(frozen=True)
class TweedieKernelParams:
    """Kernel center x >= 0, bandwidth h > 0 and power p in (1, 2)."""

    x: float
    h: float
    p: float

    def __post_init__(self):
        if self.x < 0.0 or not np.isfinite(self.x):
            raise DomainError(f"center x must be finite and >= 0, got {self.x}")
        if self.h <= 0.0 or not np.isfinite(self.h):
            raise DomainError(f"bandwidth h must be finite and > 0, got {self.h}")
        validate_power(self.p)

    @property
    def lam(self):
        return derived_params(self.x, self.h, self.p)[0]

    @property
    def alpha(self):
        return power_alpha(self.p)

    @property
    def beta(self):
        return derived_params(self.x, self.h, self.p)[2]


@dataclass(frozen=True)
class KernelValue:
    """Atom probability or subdensity value, tagged by kind."""

    kind: str  # "atom" | "subdensity"
    value: float


def derived_params(x, h, p):
    """(lam, alpha, beta) of the compound representation; lam = beta = 0 at x = 0."""
    p = validate_power(p)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("center x must be >= 0")
    if h <= 0.0:
        raise DomainError(f"bandwidth h must be > 0, got {h}")
    alpha = (2.0 - p) / (p - 1.0)
    lam = x ** (2.0 - p) / (h * (2.0 - p))
    beta = h * (p - 1.0) * x ** (p - 1.0)
    if x.ndim == 0:
        return float(lam), alpha, float(beta)
    return lam, alpha, beta


def point_mass(x, h, p):
    """Kernel probability of an exact zero: exp(-lam); equals 1 at x = 0."""
    lam, _, _ = derived_params(x, h, p)
    out = np.exp(np.negative(lam))
    return out if np.ndim(out) else float(out)


def log_subdensity_matrix(t, centers, h, p, policy=DEFAULT_POLICY):
    """(len(centers), len(t)) matrix of log continuous-part kernel values.

    Entry (i, j) is the log subdensity of the kernel centered at
    centers[i], evaluated at t[j].  This is the single canonical pair
    computation; the scalar entry points delegate to it so that batched
    and per-point evaluation agree bitwise.
    """
    t = np.ascontiguousarray(t, dtype=float)
    centers = np.ascontiguousarray(centers, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("kernel subdensity requires t > 0")
    if np.any(centers <= 0.0):
        raise DomainError("kernel subdensity requires centers > 0")
    lam, alpha, beta = derived_params(centers, h, p)
    log_t = np.log(t)
    w = (np.log(lam) - alpha * np.log(beta))[:, None] + alpha * log_t[None, :]
    pref = (-lam)[:, None] - np.outer(1.0 / beta, t) - log_t[None, :]
    return pref + log_series_sum(w, alpha, policy.cutoff, policy.max_index)


def log_subdensity_diag(t, h, p, policy=DEFAULT_POLICY):
    """Log subdensity of each kernel evaluated at its own center, k(t_i; t_i)."""
    t = np.ascontiguousarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("kernel subdensity requires t > 0")
    lam, alpha, beta = derived_params(t, h, p)
    log_t = np.log(t)
    w = (np.log(lam) - alpha * np.log(beta)) + alpha * log_t
    pref = (-lam) - (1.0 / beta) * t - log_t
    return pref + log_series_sum(w, alpha, policy.cutoff, policy.max_index)


def log_subdensity(t, x, h, p, policy=DEFAULT_POLICY):
    """Log of the continuous kernel part at t > 0 for center x > 0.

    Accepts scalar or array t.
    """
    if x <= 0.0:
        raise DomainError(f"log_subdensity requires center x > 0, got {x}")
    t_arr = np.asarray(t, dtype=float)
    out = log_subdensity_matrix(
        np.atleast_1d(t_arr), np.array([float(x)]), h, p, policy
    )[0]
    return float(out[0]) if t_arr.ndim == 0 else out


def subdensity(t, x, h, p, policy=DEFAULT_POLICY):
    """Continuous kernel part at t > 0 for center x > 0."""
    return np.exp(log_subdensity(t, x, h, p, policy))


def kernel_eval(t, x, h, p, policy=DEFAULT_POLICY):
    """Full kernel value at t >= 0: atom at t = 0, subdensity for t > 0.

    At x = 0 the kernel degenerates: atom 1 at t = 0, zero elsewhere.
    """
    if t < 0.0:
        raise DomainError(f"kernel argument t must be >= 0, got {t}")
    if x < 0.0:
        raise DomainError(f"kernel center x must be >= 0, got {x}")
    if x == 0.0:
        if t == 0.0:
            return KernelValue("atom", 1.0)
        return KernelValue("subdensity", 0.0)
    if t == 0.0:
        return KernelValue("atom", point_mass(x, h, p))
    return KernelValue("subdensity", float(subdensity(t, x, h, p, policy)))


def log_wright_series(a, alpha, policy=DEFAULT_POLICY):
    """Log of sum_{j>=1} a**j / (j! * Gamma(j*alpha)), by forward summation.

    Deliberately independent of the kernel series evaluator: terms are
    accumulated from j = 1 upward in log space and combined with a single
    log-sum-exp at the end.
    """
    if a < 0.0:
        raise DomainError(f"series argument must be >= 0, got {a}")
    if alpha <= 0.0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if a == 0.0:
        return -math.inf
    log_a = math.log(a)
    log_terms = []
    running_max = -math.inf
    j = 1
    while j <= policy.max_index:
        lt = j * log_a - gammaln(j + 1.0) - gammaln(j * alpha)
        log_terms.append(lt)
        if lt > running_max:
            running_max = lt
        elif lt < running_max + math.log(policy.cutoff):
            break
        j += 1
    else:
        from .errors import NonConvergence

        raise NonConvergence(
            f"Wright series did not converge within {policy.max_index} terms"
        )
    arr = np.array(log_terms)
    m = arr.max()
    return float(m + math.log(np.sum(np.exp(arr - m))))


def wright_series(a, alpha, policy=DEFAULT_POLICY):
    """Value of the series sum_{j>=1} a**j / (j! * Gamma(j*alpha)); 0 at a = 0."""
    if a == 0.0:
        return 0.0
    return math.exp(log_wright_series(a, alpha, policy))


def unit_deviance(u, x, p):
    """Exponential-dispersion discrepancy d(u, x) >= 0, zero iff u = x."""
    p = validate_power(p)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or x <= 0.0:
        raise DomainError("unit_deviance requires u > 0 and x > 0")
    val = 2.0 * (
        u ** (2.0 - p) / ((1.0 - p) * (2.0 - p))
        - u * x ** (1.0 - p) / (1.0 - p)
        + x ** (2.0 - p) / (2.0 - p)
    )
    return float(val) if u.ndim == 0 else val


def saddlepoint_subdensity(u, x, h, p):
    """Small-bandwidth density approximation (2*pi*h*u**p)**-0.5 * exp(-d/(2h))."""
    p = validate_power(p)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or x <= 0.0 or h <= 0.0:
        raise DomainError("saddlepoint_subdensity requires u > 0, x > 0, h > 0")
    d = unit_deviance(u, x, p)
    val = np.exp(-d / (2.0 * h)) / np.sqrt(2.0 * math.pi * h * u**p)
    return float(val) if u.ndim == 0 else val


def gaussian_local_subdensity(u, x, h, p):
    """Local Gaussian approximation with variance h * x**p around the center."""
    p = validate_power(p)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or x <= 0.0 or h <= 0.0:
        raise DomainError("gaussian_local_subdensity requires u > 0, x > 0, h > 0")
    s2 = h * x**p
    val = np.exp(-((u - x) ** 2) / (2.0 * s2)) / np.sqrt(2.0 * math.pi * s2)
    return float(val) if u.ndim == 0 else val


def bessel_subdensity_half(t, x, h):
    """Closed form of the subdensity at p = 3/2 via the order-1 Bessel function.

    exp(-lam - t/beta) * sqrt(lam/(t*beta)) * I1(2*sqrt(lam*t/beta)),
    evaluated with the exponentially scaled Bessel function for stability.
    Used as an independent oracle for the series evaluator.
    """
    if t <= 0.0 or x <= 0.0:
        raise DomainError("bessel_subdensity_half requires t > 0 and x > 0")
    lam, _, beta = derived_params(x, h, 1.5)
    z = 2.0 * math.sqrt(lam * t / beta)
    log_val = (
        -lam
        - t / beta
        + 0.5 * (math.log(lam) - math.log(t) - math.log(beta))
        + math.log(ive(1, z))
        + z
    )
    return math.exp(log_val)


def sample(mu, h, p, n, seed):
    """Draw n values from the kernel law with mean mu and dispersion h.

    Uses the exact compound representation: N ~ Poisson(lam), then a
    Gamma(N * alpha, beta) total (0 when N = 0).  Deterministic per seed.
    """
    p = validate_power(p)
    if mu <= 0.0:
        raise DomainError(f"mean mu must be > 0, got {mu}")
    if h <= 0.0:
        raise DomainError(f"dispersion h must be > 0, got {h}")
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    lam, alpha, beta = derived_params(mu, h, p)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam, size=n)
    out = np.zeros(n)
    pos = counts > 0
    if np.any(pos):
        out[pos] = rng.gamma(shape=counts[pos] * alpha, scale=beta)
    return out


def dispersion_from_zero_mass(mu, p, p0):
    """Dispersion h making the kernel's zero probability equal p0 at center mu."""
    p = validate_power(p)
    if mu <= 0.0:
        raise DomainError(f"mean mu must be > 0, got {mu}")
    if not 0.0 < p0 < 1.0:
        raise DomainError(f"zero probability must lie in (0, 1), got {p0}")
    return mu ** (2.0 - p) / ((2.0 - p) * (-math.log(p0)))
