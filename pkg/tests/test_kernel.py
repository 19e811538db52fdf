"""Kernel law: parametrization, series evaluation, approximations, sampling."""

import math

import numpy as np
import pytest
from scipy.special import gammaln, ive

from tweedie_kde import kernel as K
from tweedie_kde.errors import DomainError, NonConvergence

from conftest import kernel_quad


class TestDerivedParams:
    def test_gof_null_rate_matches_log_zero_mass(self):
        h = K.dispersion_from_zero_mass(2.0, 1.1, 0.3)
        lam, alpha, beta = K.derived_params(2.0, h, 1.1)
        assert lam == pytest.approx(-math.log(0.3), rel=1e-12)
        assert lam == pytest.approx(1.2040, abs=5e-5)

    def test_alpha_is_one_at_power_three_halves(self):
        for x, h in [(0.3, 0.2), (2.0, 1.0), (7.0, 0.01)]:
            _, alpha, _ = K.derived_params(x, h, 1.5)
            assert alpha == 1.0

    def test_zero_center_degenerates(self):
        lam, alpha, beta = K.derived_params(0.0, 0.3, 1.3)
        assert lam == 0.0
        assert beta == 0.0
        assert alpha == pytest.approx(7.0 / 3.0, rel=1e-15)

    def test_invalid_power_rejected(self):
        for p in (1.0, 2.0, 0.5, 2.5):
            with pytest.raises(DomainError):
                K.derived_params(1.0, 0.1, p)

    def test_params_type_validates(self):
        with pytest.raises(DomainError):
            K.TweedieKernelParams(x=-1.0, h=0.1, p=1.5)
        with pytest.raises(DomainError):
            K.TweedieKernelParams(x=1.0, h=0.0, p=1.5)
        params = K.TweedieKernelParams(x=2.0, h=0.5, p=1.5)
        assert params.alpha == 1.0
        assert params.lam == pytest.approx(2.0**0.5 / 0.25, rel=1e-15)


class TestPointMass:
    def test_gof_null_construction(self):
        h = K.dispersion_from_zero_mass(2.0, 1.1, 0.3)
        assert K.point_mass(2.0, h, 1.1) == pytest.approx(0.3, rel=1e-12)
        assert K.point_mass(2.0, 1.7221, 1.1) == pytest.approx(0.30, abs=1e-4)

    def test_degenerate_center(self):
        assert K.point_mass(0.0, 0.7, 1.4) == 1.0

    def test_vanishes_monotonically_as_bandwidth_shrinks(self):
        masses = [K.point_mass(1.0, h, 1.5) for h in (1.0, 0.3, 0.1, 0.03, 0.01)]
        assert all(a > b for a, b in zip(masses, masses[1:]))
        assert masses[-1] < 1e-40


class TestSeries:
    def test_matches_bessel_closed_form_at_power_three_halves(self, rng):
        for _ in range(20):
            t = rng.uniform(0.1, 8.0)
            x = rng.uniform(0.2, 6.0)
            h = rng.uniform(0.05, 1.5)
            series = K.subdensity(t, x, h, 1.5)
            closed = K.bessel_subdensity_half(t, x, h)
            assert series == pytest.approx(closed, rel=1e-10)

    def test_total_mass_is_one(self):
        for (x, h, p) in [(1.0, 0.2, 1.3), (2.0, 0.05, 1.9), (0.5, 1.0, 1.1)]:
            total = K.point_mass(x, h, p) + kernel_quad(lambda t: 1.0, x, h, p)
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_wright_series_identity(self):
        cases = [(1.3, 2.0, 0.3, 1.2), (0.4, 1.0, 0.05, 1.7),
                 (5.0, 2.0, 1.0, 1.9), (2.0, 2.0, 0.02, 1.1),
                 (0.9, 0.5, 0.4, 1.5)]
        for t, x, h, p in cases:
            lam, alpha, beta = K.derived_params(x, h, p)
            arg = lam * (t / beta) ** alpha
            via_wright = -lam - t / beta - math.log(t) + K.log_wright_series(
                arg, alpha
            )
            direct = K.log_subdensity(t, x, h, p)
            assert math.exp(direct - via_wright) == pytest.approx(1.0, abs=1e-12)

    def test_boundary_blowup_for_alpha_below_one(self):
        # For alpha < 1 the subdensity behaves like the first series term
        # near zero: k(t) * t**(1 - alpha) converges to a positive limit.
        # The approach is O(t**alpha), so use alpha = 2/3 for a testable rate.
        x, h, p = 1.0, 0.5, 1.6
        lam, alpha, beta = K.derived_params(x, h, p)
        assert alpha < 1.0
        limit = math.exp(-lam) * lam / (math.gamma(alpha) * beta**alpha)
        scaled = [K.subdensity(t, x, h, p) * t ** (1.0 - alpha)
                  for t in (1e-8, 1e-10, 1e-12)]
        gaps = [abs(s - limit) for s in scaled]
        assert gaps[0] > gaps[1] > gaps[2]
        assert scaled[-1] == pytest.approx(limit, rel=1e-4)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            K.log_subdensity(0.0, 1.0, 0.1, 1.5)
        with pytest.raises(DomainError):
            K.log_subdensity(1.0, 0.0, 0.1, 1.5)

    def test_nonconvergence_when_index_cap_too_small(self):
        policy = K.SeriesPolicy(max_index=5)
        with pytest.raises(NonConvergence):
            K.log_subdensity(1.0, 1.0, 0.001, 1.5, policy)

    def test_tiny_alpha_fallback_path(self):
        # power close to 1 routes through the dense log-sum-exp fallback
        p = 1.02
        t, x, h = 1.7, 2.0, 0.4
        lam, alpha, beta = K.derived_params(x, h, p)
        assert alpha > 25.0
        direct = K.log_subdensity(t, x, h, p)
        arg = lam * (t / beta) ** alpha
        via_wright = -lam - t / beta - math.log(t) + K.log_wright_series(arg, alpha)
        assert math.exp(direct - via_wright) == pytest.approx(1.0, abs=1e-11)


class TestWrightSeries:
    def test_empty_sum_at_zero(self):
        assert K.wright_series(0.0, 0.7) == 0.0

    def test_bessel_identity_at_alpha_one(self):
        # sum 1/(j! (j-1)!) = I_1(2)
        oracle = float(ive(1, 2.0) * math.exp(2.0))
        assert K.wright_series(1.0, 1.0) == pytest.approx(oracle, rel=1e-12)

    def test_strictly_increasing(self):
        assert K.wright_series(2.0, 0.5) > K.wright_series(1.0, 0.5)

    def test_rejects_negative_argument(self):
        with pytest.raises(DomainError):
            K.wright_series(-1.0, 0.5)


class TestKernelEval:
    def test_degenerate_atom(self):
        v = K.kernel_eval(0.0, 0.0, 0.5, 1.5)
        assert v.kind == "atom" and v.value == 1.0

    def test_atom_from_gof_null(self):
        h = K.dispersion_from_zero_mass(2.0, 1.1, 0.3)
        v = K.kernel_eval(0.0, 2.0, h, 1.1)
        assert v.kind == "atom" and v.value == pytest.approx(0.30, rel=1e-12)

    def test_degenerate_kernel_off_origin(self):
        v = K.kernel_eval(3.7, 0.0, 0.5, 1.5)
        assert v.kind == "subdensity" and v.value == 0.0

    def test_positive_branch_matches_subdensity(self):
        v = K.kernel_eval(1.2, 2.0, 0.3, 1.4)
        assert v.kind == "subdensity"
        assert v.value == pytest.approx(K.subdensity(1.2, 2.0, 0.3, 1.4), rel=1e-15)


class TestUnitDeviance:
    def test_zero_at_center(self):
        for x in (0.2, 1.0, 3.0):
            for p in (1.1, 1.5, 1.9):
                assert K.unit_deviance(x, x, p) == pytest.approx(0.0, abs=1e-12)

    def test_matches_integral_definition(self):
        # d(u, x) = 2 * integral_x^u (u - t) / t**p dt
        from scipy.integrate import quad

        for (u, x, p) in [(1.0, 2.0, 1.5), (3.0, 0.8, 1.2), (0.4, 1.6, 1.8)]:
            oracle = 2.0 * quad(lambda t: (u - t) / t**p, x, u,
                                epsabs=1e-13, epsrel=1e-13)[0]
            assert K.unit_deviance(u, x, p) == pytest.approx(oracle, rel=1e-10)
        assert K.unit_deviance(1.0, 2.0, 1.5) == pytest.approx(0.4853, abs=1e-4)

    def test_local_quadratic_expansion(self):
        # d(u, x) / (u - x)**2 -> 1 / x**p as u -> x
        x, p, du = 1.7, 1.4, 1e-4
        ratio = K.unit_deviance(x + du, x, p) / du**2
        assert ratio * x**p == pytest.approx(1.0, abs=1e-3)


class TestSaddlepoint:
    def test_exponential_factor_one_at_center(self):
        x, h, p = 1.3, 0.05, 1.6
        expected = 1.0 / math.sqrt(2.0 * math.pi * h * x**p)
        assert K.saddlepoint_subdensity(x, x, h, p) == pytest.approx(
            expected, rel=1e-14
        )

    def test_close_to_series_at_small_bandwidth(self):
        u = x = 1.0
        ratio = K.subdensity(u, x, 1e-3, 1.3) / K.saddlepoint_subdensity(
            u, x, 1e-3, 1.3
        )
        assert abs(ratio - 1.0) < 0.01

    def test_sup_ratio_decreases_with_bandwidth(self):
        x, p = 1.0, 1.3
        us = np.linspace(0.5, 2.0, 31)
        sups = []
        for h in (1e-1, 1e-2, 1e-3):
            series = K.subdensity(us, x, h, p)
            approx = K.saddlepoint_subdensity(us, x, h, p)
            sups.append(np.max(np.abs(series / approx - 1.0)))
        assert sups[0] > sups[1] > sups[2]

    def test_strictly_positive(self, rng):
        for _ in range(10):
            u = rng.uniform(0.01, 20.0)
            assert K.saddlepoint_subdensity(u, 1.0, 0.2, 1.5) > 0.0


class TestGaussianLocal:
    def test_peak_value(self):
        x, h, p = 2.0, 0.01, 1.4
        assert K.gaussian_local_subdensity(x, x, h, p) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi * h * x**p), rel=1e-14
        )

    def test_close_to_series_in_local_window(self):
        x, h, p = 1.0, 1e-4, 1.5
        for u in (x - math.sqrt(h), x, x + math.sqrt(h)):
            ratio = K.subdensity(u, x, h, p) / K.gaussian_local_subdensity(
                u, x, h, p
            )
            assert abs(ratio - 1.0) < 0.02

    def test_symmetric_around_center(self):
        x, h, p, d = 1.5, 0.02, 1.7, 0.13
        assert K.gaussian_local_subdensity(x + d, x, h, p) == pytest.approx(
            K.gaussian_local_subdensity(x - d, x, h, p), rel=1e-14
        )


class TestSampling:
    def test_zero_fraction_matches_atom(self):
        mu, h, p, n = 2.0, 0.8, 1.4, 100_000
        draws = K.sample(mu, h, p, n, seed=42)
        target = K.point_mass(mu, h, p)
        se = math.sqrt(target * (1.0 - target) / n)
        assert abs(np.mean(draws == 0.0) - target) < 3.0 * se

    def test_mean_and_variance(self):
        mu, h, p, n = 2.0, 0.8, 1.4, 100_000
        draws = K.sample(mu, h, p, n, seed=7)
        var_target = h * mu**p
        se_mean = math.sqrt(var_target / n)
        assert abs(draws.mean() - mu) < 3.0 * se_mean
        m4 = np.mean((draws - draws.mean()) ** 4)
        se_var = math.sqrt((m4 - var_target**2) / n)
        assert abs(draws.var(ddof=1) - var_target) < 3.0 * se_var

    def test_seed_determinism(self):
        a = K.sample(1.5, 0.3, 1.2, 1000, seed=99)
        b = K.sample(1.5, 0.3, 1.2, 1000, seed=99)
        assert np.array_equal(a, b)

    def test_domain_validation(self):
        with pytest.raises(DomainError):
            K.sample(0.0, 0.3, 1.5, 10, seed=0)
        with pytest.raises(DomainError):
            K.sample(1.0, 0.3, 1.5, 0, seed=0)


class TestDispersionFromZeroMass:
    def test_paper_value(self):
        assert K.dispersion_from_zero_mass(2.0, 1.1, 0.3) == pytest.approx(
            1.722, abs=5e-4
        )

    def test_inverts_point_mass(self, rng):
        for _ in range(10):
            mu = rng.uniform(0.3, 5.0)
            p = rng.uniform(1.05, 1.95)
            p0 = rng.uniform(0.05, 0.95)
            h = K.dispersion_from_zero_mass(mu, p, p0)
            assert K.point_mass(mu, h, p) == pytest.approx(p0, abs=1e-12)

    def test_diverges_as_zero_mass_fills(self):
        hs = [K.dispersion_from_zero_mass(2.0, 1.3, p0)
              for p0 in (0.5, 0.9, 0.99, 0.999)]
        assert all(a < b for a, b in zip(hs, hs[1:]))

    def test_rejects_degenerate_zero_mass(self):
        for p0 in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(DomainError):
                K.dispersion_from_zero_mass(2.0, 1.3, p0)


class TestSeriesPolicy:
    def test_validation(self):
        with pytest.raises(DomainError):
            K.SeriesPolicy(cutoff=0.0)
        with pytest.raises(DomainError):
            K.SeriesPolicy(cutoff=1.5)
        with pytest.raises(DomainError):
            K.SeriesPolicy(max_index=0)

    def test_tighter_cutoff_refines_consistently(self):
        loose = K.SeriesPolicy(cutoff=1e-8)
        tight = K.SeriesPolicy(cutoff=1e-16)
        a = K.log_subdensity(1.3, 2.0, 0.1, 1.6, loose)
        b = K.log_subdensity(1.3, 2.0, 0.1, 1.6, tight)
        assert a == pytest.approx(b, abs=1e-9)
