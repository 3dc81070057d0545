import math

import mpmath as mp
import pytest

from maassum.errors import (
    NonConvergence,
    NonPositiveX,
    OutOfConvergenceRegion,
    ParameterPole,
    PoleAtNonPositiveInteger,
    PoleInS,
)
from maassum.numkernel import (
    DEFAULT_CONFIG,
    EvalResult,
    PrecisionConfig,
    bessel_j,
    bessel_threshold,
    gamma_real,
    incomplete_beta_cont,
    quad_adaptive,
    upper_incomplete_gamma,
    w_defining_integral,
    w_function,
)

CFG = DEFAULT_CONFIG


def rel(a, b):
    return float(abs(mp.mpc(a) - mp.mpc(b)) / abs(mp.mpc(b)))


class TestPrecisionConfig:
    def test_defaults(self):
        assert CFG.working_digits == 30
        assert CFG.eps == 1e-30

    @pytest.mark.parametrize("kw", [{"working_digits": 10}, {"quad_tol": 0}, {"series_tol": -1},
                                    {"max_terms": 0}, {"working_digits": 20.5}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            PrecisionConfig(**kw)

    def test_eval_result_rejects_negative_error(self):
        with pytest.raises(ValueError):
            EvalResult(1, -1.0)


class TestGamma:
    def test_classical_values(self):
        assert gamma_real(1).value == 1
        assert rel(gamma_real(0.5).value, mp.sqrt(mp.pi)) < 1e-28
        assert rel(gamma_real(4.5).value, 105 * mp.sqrt(mp.pi) / 16) < 1e-28

    def test_reflection_branch_negative(self):
        # Gamma(-1/2) = -2 sqrt(pi)
        assert rel(gamma_real(-0.5).value, -2 * mp.sqrt(mp.pi)) < 1e-28

    @pytest.mark.parametrize("x", [0, -1, -7])
    def test_poles(self, x):
        with pytest.raises(PoleAtNonPositiveInteger):
            gamma_real(x)

    def test_error_estimate_reported(self):
        r = gamma_real(3.3)
        assert r.converged and 0 <= r.err < 1e-25


class TestUpperIncompleteGamma:
    def test_exponential_case(self):
        assert rel(upper_incomplete_gamma(1, 2).value, mp.exp(-2)) < 1e-28

    def test_erfc_case(self):
        assert rel(upper_incomplete_gamma(0.5, 1).value, mp.sqrt(mp.pi) * mp.erfc(1)) < 1e-28

    @pytest.mark.parametrize("a", [-0.5, 0.5, 1.5, -2.5, 0, -3])
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0, 4 * math.pi])
    def test_against_defining_integral(self, a, x):
        ref = mp.quad(lambda t: mp.power(t, a - 1) * mp.exp(-t), [x, x + 1, x + 10, mp.inf])
        assert rel(upper_incomplete_gamma(a, x).value, ref) < 1e-10

    @pytest.mark.parametrize("x", [0, -1.0])
    def test_nonpositive_x(self, x):
        with pytest.raises(NonPositiveX):
            upper_incomplete_gamma(0.5, x)


class TestIncompleteBeta:
    def test_constant_integrand(self):
        assert rel(incomplete_beta_cont(0.3, 1, 1).value, 0.3) < 1e-28

    def test_polynomial_integrand(self):
        assert rel(incomplete_beta_cont(0.5, 2, 2).value, mp.mpf(1) / 12) < 1e-28

    @pytest.mark.parametrize("x,a,b", [(0.2, 0.5, 3.5), (0.7, 2.5, 1.5), (0.9, 1.5, 0.5)])
    def test_positive_a_matches_integral(self, x, a, b):
        ref = mp.quad(lambda t: mp.power(t, a - 1) * mp.power(1 - t, b - 1), [0, x])
        assert rel(incomplete_beta_cont(x, a, b).value, ref) < 1e-10

    @pytest.mark.parametrize("x,b", [(0.2, 3.5), (2 / 11, 3.5), (0.6, 4.5)])
    def test_contiguous_relation_negative_a(self, x, b):
        # integration by parts: a B(x;a,b) = x^a (1-x)^b + (a+b) B(x;a+1,b)
        a = -0.5
        lhs = incomplete_beta_cont(x, a, b).value
        rhs = (mp.power(x, a) * mp.power(1 - x, b) + (a + b) * incomplete_beta_cont(x, a + 1, b).value) / a
        assert rel(lhs, rhs) < 1e-14

    @pytest.mark.parametrize("a", [0, -2])
    def test_pole_in_a(self, a):
        with pytest.raises(ParameterPole):
            incomplete_beta_cont(0.5, a, 2)

    def test_x_outside_unit_interval(self):
        with pytest.raises(ValueError):
            incomplete_beta_cont(1.2, 1, 1)


class TestBessel:
    def test_half_integer_closed_forms(self):
        z = mp.mpf(math.pi)
        assert abs(bessel_j(0.5, math.pi).value - mp.sqrt(2 / (mp.pi * z)) * mp.sin(z)) < 1e-25
        z = 2
        ref = mp.sqrt(2 / (mp.pi * z)) * (mp.sin(z) / z - mp.cos(z))
        assert rel(bessel_j(1.5, z).value, ref) < 1e-25

    @pytest.mark.parametrize("nu", [0, 1.5, 3.5, 7.25])
    @pytest.mark.parametrize("z", [0.3, 5.0, 40.0, 120.0, 900.0])
    def test_against_mpmath(self, nu, z):
        ref = mp.besselj(nu, z)
        r = bessel_j(nu, z)
        assert abs(r.value - ref) < 1e-20 * max(1, abs(ref))

    def test_envelope_for_large_argument(self):
        assert abs(bessel_j(5, 1000).value) < math.sqrt(2 / (math.pi * 1000)) * 1.001

    @pytest.mark.parametrize("nu", [0.5, 2.5, 5.0])
    def test_regimes_agree_on_overlap(self, nu):
        t = bessel_threshold(nu)
        for z in (0.8 * t, t, 1.2 * t):
            series = bessel_j(nu, z, threshold=10 * t).value
            hankel = bessel_j(nu, z, threshold=0.1).value
            assert abs(series - hankel) < CFG.series_tol

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_j(-1, 1)
        with pytest.raises(ValueError):
            bessel_j(1, 0)


class TestW:
    def test_trivial_case(self):
        assert rel(w_function(1, 1).value, 1) < 1e-28
        assert rel(w_defining_integral(1, 1).value, 1) < 1e-15

    @pytest.mark.parametrize("nu", [-0.5, 0.5, 1, 2.5])
    @pytest.mark.parametrize("s", [0.6, 1, 2, 5, 10])
    def test_recursion(self, nu, s):
        lhs = s * w_function(nu, s).value + w_function(nu, s + 1).value
        rhs = mp.power(2, nu) * mp.gamma(s + nu)
        assert rel(lhs, rhs) < 1e-10

    @pytest.mark.parametrize("nu,s", [(-0.5, 1), (-0.5, 0.7), (0.5, 1), (0.5, 3), (1, 0.2), (2.5, 4)])
    def test_closed_form_vs_integral(self, nu, s):
        assert rel(w_function(nu, s).value, w_defining_integral(nu, s).value) < 1e-8

    def test_integral_region(self):
        with pytest.raises(OutOfConvergenceRegion):
            w_defining_integral(-0.5, 0.4)

    @pytest.mark.parametrize("nu,s", [(1, 0), (1, -2), (0.5, -0.5), (-0.5, 0.5)])
    def test_poles(self, nu, s):
        with pytest.raises(PoleInS):
            w_function(nu, s)


class TestQuadrature:
    def test_unit_interval(self):
        assert rel(quad_adaptive(lambda t: 1, 0, 1).value, 1) < 1e-25

    def test_arcsine_endpoint_singularity(self):
        r = quad_adaptive(lambda u: mp.power(u, -0.5) * mp.power(1 - u, -0.5), 0, 0.5, (True, False))
        assert rel(r.value, mp.pi / 2) < 1e-15

    def test_improper_tail(self):
        assert rel(quad_adaptive(lambda v: v ** -2, 1, mp.inf).value, 1) < 1e-20

    @pytest.mark.parametrize("e", [-0.5, -0.9, -0.95])
    def test_strong_singularity_at_zero(self, e):
        r = quad_adaptive(lambda v: mp.power(v, e), 0, 1, (True, False))
        assert rel(r.value, 1 / (1 + mp.mpf(e))) < 1e-20

    def test_right_endpoint_singularity(self):
        r = quad_adaptive(lambda v: mp.power(1 - v, -0.5), 0, 1, (False, True))
        assert rel(r.value, 2) < 1e-20

    def test_too_strong_singularity_away_from_zero_is_flagged(self):
        # b - t is formed by cancellation, so the mass within one ulp of b is lost
        with pytest.raises(NonConvergence):
            quad_adaptive(lambda v: mp.power(1 - v, -0.95), 0, 1, (False, True))

    def test_nonconvergence_is_raised(self):
        with pytest.raises(NonConvergence):
            quad_adaptive(lambda t: mp.sin(1 / t) / t, mp.mpf(1e-6), 1, cfg=PrecisionConfig(quad_tol=1e-25))
