"""Shared test helpers: singularity-aware quadrature against the kernel."""

import numpy as np
import pytest
from scipy import integrate

from tweedie_kde.kernel import power_alpha, subdensity


def kernel_quad(fn, x, h, p, tol=1e-13):
    """Integral of fn(t) * k(t; x) dt over (0, inf).

    The near-zero piece is integrated after the substitution t = v**(1/alpha)
    when alpha < 1, which removes the integrable t**(alpha - 1) endpoint
    singularity of the subdensity.
    """
    alpha = power_alpha(p)
    a = x / 2.0
    if alpha < 1.0:
        s = 1.0 / alpha
        lo, _ = integrate.quad(
            lambda v: fn(v**s) * subdensity(v**s, x, h, p) * s * v ** (s - 1.0),
            0.0, a**alpha, limit=400, epsabs=tol, epsrel=tol,
        )
    else:
        lo, _ = integrate.quad(
            lambda t: fn(t) * subdensity(t, x, h, p),
            0.0, a, limit=400, epsabs=tol, epsrel=tol,
        )
    mid, _ = integrate.quad(
        lambda t: fn(t) * subdensity(t, x, h, p),
        a, 4.0 * x, points=[x], limit=400, epsabs=tol, epsrel=tol,
    )
    hi, _ = integrate.quad(
        lambda t: fn(t) * subdensity(t, x, h, p),
        4.0 * x, np.inf, limit=400, epsabs=tol, epsrel=tol,
    )
    return lo + mid + hi


def smooth_quad(fn, x, tol=1e-11):
    """Integral of fn over (0, inf), split around a location of interest."""
    lo, _ = integrate.quad(fn, 0.0, 2.0 * x, points=[x], limit=300,
                           epsabs=tol, epsrel=tol)
    hi, _ = integrate.quad(fn, 2.0 * x, np.inf, limit=300,
                           epsabs=tol, epsrel=tol)
    return lo + hi


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
