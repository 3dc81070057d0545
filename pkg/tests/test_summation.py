"""Individual terms of the summation formula and their assembly."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from maassum import arith
from maassum.errors import NonPositiveX, OutOfDomain, RangeViolation
from maassum.forms import eisenstein_p_form, zagier_form
from maassum.summation import (
    IdentityReport,
    SummationParams,
    TailPolicy,
    _u_integral_reference,
    asymptotic_ratio,
    bessel_series_F,
    error_term_ratio,
    first_error_coefficient,
    g_rho,
    main_term,
    nonholo_correction,
    residual_q,
    rho_admissible,
    rhs_holomorphic,
    rhs_nonholo_integral,
    rhs_via_shadow,
    u_integral,
    verify_identity,
    weighted_power_sum,
)

K32 = Fraction(3, 2)


@pytest.fixture(scope="module")
def zagier():
    return zagier_form()


@pytest.fixture(scope="module")
def p5():
    return eisenstein_p_form(5)


def central_diff(f, x, h=mp.mpf("1e-4")):
    """Fourth-order central difference."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def exact_riesz(rho: int, x: Fraction) -> Fraction:
    """sum_{n <= x} H(n) (x-n)^rho / rho! in exact rationals."""
    total = Fraction(0)
    for n in range(1, math.floor(x) + 1):
        total += arith.hurwitz_h(n) * (x - n) ** rho
    return total / math.factorial(rho)


# ------------------------------------------------------ weighted power sum

class TestWeightedPowerSum:
    @pytest.mark.parametrize("rho,x,expected", [
        (0, 4.5, Fraction(5, 6)),
        (1, 5, Fraction(7, 6)),
        (0, 4, Fraction(1, 3) + Fraction(1, 4)),
        (0, 0.5, Fraction(0)),
        (3, 0.99, Fraction(0)),
    ])
    def test_small_cases(self, zagier, rho, x, expected):
        got = weighted_power_sum(zagier, rho, x)
        assert abs(got - mp.mpf(expected.numerator) / expected.denominator) < 1e-28

    @pytest.mark.parametrize("rho,x", [(1, Fraction(41, 2)), (2, Fraction(201, 4)), (3, Fraction(77, 1))])
    def test_against_exact_rationals(self, zagier, rho, x):
        ref = exact_riesz(rho, x)
        got = weighted_power_sum(zagier, rho, float(x))
        assert abs(got - mp.mpf(ref.numerator) / ref.denominator) < 1e-25 * abs(float(ref))

    def test_negative_rho_at_integer_x(self, zagier):
        with pytest.raises(OutOfDomain):
            weighted_power_sum(zagier, -0.5, 10)
        assert mp.isfinite(mp.re(weighted_power_sum(zagier, -0.5, 10.5)))

    def test_nonpositive_x(self, zagier):
        with pytest.raises(NonPositiveX):
            weighted_power_sum(zagier, 1, 0)

    def test_derivative_lowers_rho(self, zagier):
        # d/dx of the Riesz mean of order rho is the mean of order rho - 1
        x0 = mp.mpf(20.5)
        deriv = central_diff(lambda t: weighted_power_sum(zagier, 3, t), x0)
        ref = weighted_power_sum(zagier, 2, x0)
        assert abs(deriv - ref) < 1e-12 * abs(ref)


# ------------------------------------------------------------ g_rho kernel

class TestGRho:
    @pytest.mark.parametrize("rho", [2, 3])
    @pytest.mark.parametrize("n,x", [(1, 10), (4, 50.5), (9, 100.25)])
    def test_closed_matches_quadrature(self, rho, n, x):
        quad = g_rho(n, x, K32, rho, method="quad")
        closed = g_rho(n, x, K32, rho, method="closed")
        assert abs(quad - closed) <= 1e-20 * abs(quad)

    def test_independent_quadrature(self):
        n, x, rho, k = 4, mp.mpf(50.5), mp.mpf(2), mp.mpf(1.5)
        lo = 2 * n / (x + n)
        integral = mp.quad(lambda v: v ** -k * (1 - v) ** (k + rho - 1), [lo, 1])
        ref = 2j * mp.pi / mp.gamma(k + rho) * (1 + n / x) ** rho * integral
        assert abs(g_rho(n, x, K32, 2) - ref) < 1e-25 * abs(ref)

    def test_purely_imaginary(self):
        val = g_rho(9, 30.5, K32, 2.5)
        assert mp.re(val) == 0 and mp.im(val) > 0

    def test_vanishes_at_n_equals_x(self):
        assert g_rho(25, 25, K32, 3) == 0

    @pytest.mark.parametrize("n,x,rho", [(11, 10, 2), (1, 10, -0.6)])
    def test_range(self, n, x, rho):
        with pytest.raises(RangeViolation):
            g_rho(n, x, K32, rho)

    def test_closed_rejects_integer_weight(self):
        with pytest.raises(RangeViolation):
            g_rho(1, 10, Fraction(2), 2, method="closed")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            g_rho(1, 10, K32, 2, method="series")


def test_nonholo_correction_explicit(zagier):
    x, rho = 30.5, 2
    ref = sum(zagier.a_minus(m * m) * g_rho(m * m, x, K32, rho) for m in range(1, 6))
    ref *= mp.power(x, rho) / (2j * mp.pi)
    assert abs(nonholo_correction(zagier, rho, x) - ref) < 1e-25 * abs(ref)
    # closed and quadrature kernels agree after summation too
    assert abs(nonholo_correction(zagier, rho, x, method="quad") - ref) < 1e-20 * abs(ref)


# ------------------------------------------------------ residual and main

class TestResidualAndMain:
    @pytest.mark.parametrize("rho", [1, 2.5, 4])
    def test_zagier_main_term(self, zagier, rho):
        x = mp.mpf(123.25)
        ref = mp.pi ** 1.5 * x ** (rho + 1.5) / (24 * mp.gamma(rho + 2.5))
        assert abs(main_term(zagier, rho, x) - ref) < 1e-25 * ref

    def test_zagier_main_term_constant_at_rho_two(self, zagier):
        x = mp.mpf(77.75)
        assert abs(main_term(zagier, 2, x) / x ** 3.5 - 2 * mp.pi / 315) < 1e-28

    def test_zagier_first_error_coefficient(self, zagier):
        assert abs(first_error_coefficient(zagier) - (-math.sqrt(2) / 8)) < 1e-15

    @pytest.mark.parametrize("k", [5, 7, 9])
    def test_p_form_main_term_is_real(self, k):
        form = eisenstein_p_form(k)
        rho, x = k + 1.0, mp.mpf(40.5)
        scaled = main_term(form, rho, x) * mp.gamma(rho + 2) / x ** (rho + 1)
        ref = -mp.power(2, 2 - k) * mp.pi * mp.cospi(mp.mpf(k) / 4)
        # the Fricke phase is stored as a double
        assert abs(scaled - ref) < 1e-15

    def test_residual_assembles_constant_terms(self, zagier):
        rho, x = 2, mp.mpf(64.5)
        k = mp.mpf(1.5)
        lower = (-zagier.a0_plus * x ** rho / mp.gamma(rho + 1)
                 - zagier.a0_minus * x ** (rho + k - 1) * (2 * mp.pi) ** (k - 1) / mp.gamma(rho + k)
                 + first_error_coefficient(zagier) * x ** (rho + 1) / mp.gamma(rho + 2))
        got = residual_q(zagier, rho, x) - main_term(zagier, rho, x)
        # the first-error coefficient is a double
        assert abs(got - lower) < 1e-15 * abs(lower)

    def test_derivative_lowers_rho(self, zagier):
        x0 = mp.mpf(20.5)
        deriv = central_diff(lambda t: residual_q(zagier, 3, t), x0)
        ref = residual_q(zagier, 2, x0)
        assert abs(deriv - ref) < 1e-12 * abs(ref)

    def test_main_term_range_check(self, zagier):
        with pytest.raises(RangeViolation):
            main_term(zagier, 0.0, 10.5)
        assert main_term(zagier, 0.0, 10.5, check_range=False) != 0


# ----------------------------------------------------------- Bessel series

class TestBesselSeries:
    def test_single_term(self):
        nu, y, b, mu = 3.5, 2.0, 0.75 + 0.25j, 0.25
        res = bessel_series_F(nu, y, [b], [mu])
        ref = b * (y * y / mu) ** (nu / 2) * mp.besselj(nu, 4 * mp.pi * mp.sqrt(mu) * y)
        assert abs(res.value - complex(ref)) < 1e-14 * abs(ref)
        assert not res.conditional

    def test_zero_coefficients(self):
        res = bessel_series_F(2.5, 3.0, np.zeros(10), np.arange(1, 11) / 4)
        assert res.value == 0 and res.converged

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            bessel_series_F(2.5, 3.0, np.ones(3), np.ones(4))

    def test_forced_conditional_flag(self):
        n = np.arange(1, 2001)
        res = bessel_series_F(1.0, 2.0, np.ones(2000), n / 4, force_conditional=True)
        assert res.conditional and res.heuristic_err == res.err

    def test_holomorphic_series_error_bound(self, zagier):
        # the reported error covers the change when the series is doubled
        short = rhs_holomorphic(zagier, 3, 20.5, target=1e-8)
        long = rhs_holomorphic(zagier, 3, 20.5, n_max=4 * short.terms_used)
        assert abs(short.value - long.value) <= short.err + long.err


# ------------------------------------------------------------ u-integral

class TestUIntegral:
    @pytest.mark.parametrize("rho,c", [(2.0, 3.0), (3.0, 10.0), (0.5, 25.0), (5.0, 60.0)])
    def test_against_reference(self, rho, c):
        fast = u_integral(rho, 1.5, [c])[0]
        ref = _u_integral_reference(rho, 1.5, c)
        assert abs(fast - ref) < 1e-9 * max(1.0, abs(ref))

    def test_against_mpmath_oscillatory(self):
        rho, k, c = 2.0, 1.5, 7.0
        f = lambda t: 2 * t ** -rho * (1 + t * t) ** -k * mp.besselj(rho + 1, c * t)
        with mp.workdps(20):
            ref = mp.quadosc(f, [1, mp.inf], omega=c)
        assert abs(u_integral(rho, k, [c])[0] - float(ref)) < 1e-12

    def test_node_stability(self):
        c = np.array([5.0, 20.0, 80.0])
        a = u_integral(3.0, 1.5, c, nodes=64)
        b = u_integral(3.0, 1.5, c, nodes=96)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-16)


# ------------------------------------------------------------ shadow route

@pytest.mark.parametrize("rho,x", [(2, 20.5), (3, 50.25)])
def test_shadow_route_matches_direct(zagier, rho, x):
    direct = rhs_nonholo_integral(zagier, rho, x, target=1e-11)
    shadow = rhs_via_shadow(zagier, rho, x)
    assert abs(direct.value - shadow.value) <= 2 * (direct.err + shadow.err) + 1e-9


def test_shadow_route_range(zagier):
    with pytest.raises(RangeViolation):
        rhs_via_shadow(zagier, -0.6, 20.5)


# --------------------------------------------------------------- assembly

class TestVerifyIdentity:
    @pytest.fixture(scope="class")
    @staticmethod
    def report(zagier):
        return verify_identity(zagier, SummationParams(rho=3, x=20.5))

    def test_report_is_consistent(self, report):
        assert isinstance(report, IdentityReport)
        assert report.lhs == pytest.approx(report.lhs_weighted + report.lhs_nonholo - report.residual_q)
        assert report.residual == pytest.approx(report.lhs - report.rhs, abs=1e-12)
        assert report.rel_residual == pytest.approx(abs(report.residual) / report.diagnostics["leading_q"])

    def test_identity_holds(self, report):
        assert report.rel_residual < 1e-9
        assert report.diagnostics["converged"] and not report.diagnostics["conditional"]

    def test_outside_range_needs_experimental(self, zagier):
        with pytest.raises(RangeViolation):
            verify_identity(zagier, SummationParams(rho=0.0, x=10.5))
        assert not rho_admissible(zagier, 0.0)
        assert rho_admissible(zagier, 0.5)

    def test_conditional_regime_is_flagged(self, zagier):
        rep = verify_identity(zagier, SummationParams(rho=0.5, x=30.5))
        assert rep.diagnostics["conditional"]
        assert rep.diagnostics["extended"]

    def test_params_validation(self):
        with pytest.raises(NonPositiveX):
            SummationParams(rho=2, x=-1)
        with pytest.raises(ValueError):
            TailPolicy(cap=0)
        with pytest.raises(ValueError):
            TailPolicy(averaging_passes=-1)


# ---------------------------------------------------------- asymptotics

def test_asymptotic_ratio_is_real(zagier):
    r = asymptotic_ratio(zagier, 2, 500.5)
    assert abs(r.imag) < 1e-12 and 0.8 < r.real < 1.1


def test_error_term_ratio_weight_check(p5):
    with pytest.raises(RangeViolation):
        error_term_ratio(p5, 5, 100.5)


def test_error_term_ratio_coefficient_choice(zagier):
    ref = error_term_ratio(zagier, 5, 500.5)
    own = error_term_ratio(zagier, 5, 500.5, coefficient=first_error_coefficient(zagier))
    # the two normalizations differ by the ratio of the two constants
    scale = (-3 * math.sqrt(2) / 16) / (-math.sqrt(2) / 8)
    assert own == pytest.approx(ref * scale, rel=1e-12)
