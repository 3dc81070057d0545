"""Special functions and quadrature at configurable precision.

Everything here is built on mpmath.  Values come back wrapped in
:class:`EvalResult` so callers can see an error estimate and whether the
underlying method converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp

from .errors import (
    NonConvergence,
    NonPositiveX,
    OutOfConvergenceRegion,
    ParameterPole,
    PoleAtNonPositiveInteger,
    PoleInS,
)

__all__ = [
    "PrecisionConfig",
    "EvalResult",
    "DEFAULT_CONFIG",
    "gamma_real",
    "upper_incomplete_gamma",
    "incomplete_beta_cont",
    "bessel_j",
    "bessel_threshold",
    "w_function",
    "w_defining_integral",
    "quad_adaptive",
]


@dataclass(frozen=True)
class PrecisionConfig:
    working_digits: int = 30
    quad_tol: float = 1e-20
    series_tol: float = 1e-20
    max_terms: int = 200_000

    def __post_init__(self):
        if int(self.working_digits) != self.working_digits or self.working_digits < 15:
            raise ValueError("working_digits must be an integer >= 15")
        if not (self.quad_tol > 0 and self.series_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")

    def workdps(self, extra: int = 0):
        """Context manager running mpmath at the configured precision."""
        return mp.workdps(self.working_digits + extra)

    @property
    def eps(self) -> float:
        return 10.0 ** (-self.working_digits)


DEFAULT_CONFIG = PrecisionConfig()


@dataclass(frozen=True)
class EvalResult:
    value: object
    err: float
    terms_used: int = 0
    converged: bool = True

    def __post_init__(self):
        if not self.err >= 0:
            raise ValueError("err must be non-negative")

    def __complex__(self):
        return complex(self.value)

    def __float__(self):
        v = self.value
        if isinstance(v, (complex, mp.mpc)):
            return float(mp.re(v))
        return float(v)


def _cfg(cfg):
    return DEFAULT_CONFIG if cfg is None else cfg


def _is_nonpositive_integer(x, tol) -> bool:
    r = mp.nint(x)
    return r <= 0 and abs(x - r) <= tol


def gamma_real(x, cfg: PrecisionConfig | None = None) -> EvalResult:
    """Gamma function on the real line, reflection below one half."""
    cfg = _cfg(cfg)
    with cfg.workdps(5):
        x = mp.mpf(x)
        if _is_nonpositive_integer(x, mp.mpf(10) ** (-cfg.working_digits)):
            raise PoleAtNonPositiveInteger(f"Gamma has a pole at {x}")
        if x < 0.5:
            val = mp.pi / (mp.sinpi(x) * mp.gamma(1 - x))
        else:
            val = mp.gamma(x)
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10, 0, True)


def upper_incomplete_gamma(a, x, cfg: PrecisionConfig | None = None) -> EvalResult:
    """Gamma(a, x) for real a of any sign and x > 0.

    For a <= 0 the value is reached from a positive parameter by the
    downward recursion Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a.
    """
    cfg = _cfg(cfg)
    if not x > 0:
        raise NonPositiveX(f"x must be positive, got {x}")
    # each downward step can cancel about log10(x) digits
    guard = 10 + int(max(0.0, math.log10(float(x)))) * (int(max(0.0, -float(a))) + 1)
    with cfg.workdps(guard):
        a = mp.mpf(a)
        x = mp.mpf(x)
        if a > 0:
            val = mp.gammainc(a, x)
            steps = 0
        else:
            if mp.isint(a):
                cur = mp.mpf(0)
                val = mp.e1(x)
            else:
                cur = a + mp.ceil(-a)
                if cur == 0:
                    cur += 1
                val = mp.gammainc(cur, x)
            steps = 0
            ex = mp.exp(-x)
            while cur > a:
                cur -= 1
                val = (val - mp.power(x, cur) * ex) / cur
                steps += 1
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10, steps, True)


def incomplete_beta_cont(x, a, b, cfg: PrecisionConfig | None = None) -> EvalResult:
    """Incomplete beta B(x; a, b), analytically continued in a.

    Defined as x^a / a * 2F1(a, 1-b; a+1; x), which agrees with the integral
    of t^{a-1}(1-t)^{b-1} over (0, x) whenever a > 0.
    """
    cfg = _cfg(cfg)
    with cfg.workdps(10):
        a = mp.mpf(a)
        b = mp.mpf(b)
        x = mp.mpf(x)
        if _is_nonpositive_integer(a, mp.mpf(10) ** (-cfg.working_digits)):
            raise ParameterPole(f"first parameter {a} is a non-positive integer")
        if not (0 < x < 1):
            raise ValueError("x must lie in (0, 1)")
        val = mp.power(x, a) / a * mp.hyp2f1(a, 1 - b, a + 1, x)
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10, 0, True)


def bessel_threshold(nu) -> float:
    """Switch point between the power series and the Hankel expansion."""
    return 25.0 + 5.0 * float(nu)


def _bessel_series(nu, z, dps):
    # alternating terms peak near (z/2)^{2k}/k!^2 ~ e^z, so pad the precision
    guard = int(float(z) / 2.3) + 15
    with mp.workdps(dps + guard):
        nu = mp.mpf(nu)
        z = mp.mpf(z)
        h = z / 2
        h2 = h * h
        term = mp.power(h, nu) / mp.gamma(nu + 1)
        total = term
        k = 0
        tiny = mp.mpf(10) ** (-(dps + 5))
        while True:
            k += 1
            term = -term * h2 / (k * (k + nu))
            total += term
            if k > h and abs(term) <= tiny * abs(total):
                break
            if k > 100_000:
                raise NonConvergence("Bessel power series did not converge")
    return total, k


def _bessel_hankel(nu, z, dps):
    """Hankel asymptotic expansion; returns (value, error estimate, terms)."""
    with mp.workdps(dps + 10):
        nu = mp.mpf(nu)
        z = mp.mpf(z)
        mu = 4 * nu * nu
        omega = z - nu * mp.pi / 2 - mp.pi / 4
        p = mp.mpf(1)
        q = mp.mpf(0)
        coef = mp.mpf(1)
        last = mp.inf
        k = 0
        tiny = mp.mpf(10) ** (-(dps + 3))
        while True:
            k += 1
            coef = coef * (mu - (2 * k - 1) ** 2) / (k * 8 * z)
            mag = abs(coef)
            if mag > last:
                # the expansion started diverging; stop before this term
                k -= 1
                break
            if k % 4 == 1:
                q += coef
            elif k % 4 == 2:
                p -= coef
            elif k % 4 == 3:
                q -= coef
            else:
                p += coef
            last = mag
            if mag <= tiny or coef == 0:
                break
        amp = mp.sqrt(2 / (mp.pi * z))
        val = amp * (p * mp.cos(omega) - q * mp.sin(omega))
        err = amp * last
    return val, err, k


def bessel_j(nu, z, cfg: PrecisionConfig | None = None, threshold=None) -> EvalResult:
    """J_nu(z) for real nu >= 0 and z > 0.

    Uses the power series up to ``threshold`` (default 25 + 5 nu) and the
    Hankel expansion beyond it.  If the Hankel expansion cannot reach the
    requested tolerance the series is used instead with extra guard digits.
    """
    cfg = _cfg(cfg)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if not z > 0:
        raise ValueError("z must be positive")
    if threshold is None:
        threshold = bessel_threshold(nu)
    dps = cfg.working_digits
    if z > threshold:
        val, err, k = _bessel_hankel(nu, z, dps)
        if err <= cfg.series_tol:
            with cfg.workdps():
                return EvalResult(+val, float(err), k, True)
    val, k = _bessel_series(nu, z, dps)
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10 + cfg.eps, k, True)


def _check_w_poles(nu, s, tol):
    if _is_nonpositive_integer(s, tol) or _is_nonpositive_integer(s + nu, tol):
        raise PoleInS(f"W_{nu}(s) has a pole at s = {s}")


def w_function(nu, s, cfg: PrecisionConfig | None = None) -> EvalResult:
    """Closed form of W_nu(s) = Gamma(s+nu)/(2^s s) 2F1(s, s+nu; 1+s; 1/2)."""
    cfg = _cfg(cfg)
    with cfg.workdps(10):
        nu = mp.mpf(nu)
        s = mp.mpf(s)
        _check_w_poles(nu, s, mp.mpf(10) ** (-cfg.working_digits))
        val = mp.gamma(s + nu) / (mp.power(2, s) * s) * mp.hyp2f1(s, s + nu, 1 + s, mp.mpf(1) / 2)
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10, 0, True)


def w_defining_integral(nu, s, cfg: PrecisionConfig | None = None) -> EvalResult:
    """W_nu(s) as the integral of Gamma(nu, 2x) e^x x^{s-1} over (0, inf)."""
    cfg = _cfg(cfg)
    if not s > max(-nu, 0):
        raise OutOfConvergenceRegion(f"integral diverges for nu={nu}, s={s}")
    with cfg.workdps(10):
        nu_m = mp.mpf(nu)
        s_m = mp.mpf(s)

        def integrand(x):
            return mp.gammainc(nu_m, 2 * x) * mp.exp(x) * mp.power(x, s_m - 1)

    return quad_adaptive(integrand, 0, mp.inf, (True, False), cfg, points=[1, 10])


# power used to flatten flagged endpoint singularities: t - a = h u^m
_ENDPOINT_POWER = 20


def _segment_integrand(f, lo, hi, side):
    h = hi - lo
    m = _ENDPOINT_POWER

    if side == "left":
        def g(u):
            t = lo + h * u**m
            if t == lo:
                return mp.mpf(0)
            return f(t) * m * h * u ** (m - 1)
    else:
        def g(u):
            t = hi - h * u**m
            if t == hi:
                return mp.mpf(0)
            return f(t) * m * h * u ** (m - 1)
    return g


def quad_adaptive(
    f: Callable,
    a,
    b,
    endpoint_singularity: Sequence[bool] = (False, False),
    cfg: PrecisionConfig | None = None,
    points: Sequence | None = None,
) -> EvalResult:
    """Integrate f over (a, b), b possibly infinite.

    Tanh-sinh quadrature on each panel between ``points``.  A flagged finite
    endpoint gets its own short panel, mapped by t = a + h u^20 so that an
    algebraic singularity (t - a)^e becomes u^{20e + 19}; the double-exponential
    rule then sees a far milder (usually smooth) integrand.  At a non-zero
    endpoint the integrand still forms b - t by cancellation, so exponents
    close to -1 there stay limited by the working precision.  The degree is
    raised until the error estimate meets ``quad_tol`` (relaxed to the
    working-precision floor for large integrals).
    """
    cfg = _cfg(cfg)
    with cfg.workdps(10):
        a = mp.mpf(a)
        b = mp.mpf(b) if b != mp.inf else mp.inf
        inner = sorted(mp.mpf(p) for p in (points or []) if a < p < b)
        edges = [a] + inner + [b]
        left = bool(endpoint_singularity[0]) and mp.isfinite(a)
        right = bool(endpoint_singularity[1]) and mp.isfinite(b)
        if left:
            edges.insert(1, a + (edges[1] - a) / 16 if mp.isfinite(edges[1]) else a + 1)
        if right:
            edges.insert(len(edges) - 1, b - (b - edges[-2]) / 16)
        panels = []
        for i in range(len(edges) - 1):
            lo, hi = edges[i], edges[i + 1]
            if left and i == 0:
                panels.append((_segment_integrand(f, lo, hi, "left"), [0, 1]))
            elif right and i == len(edges) - 2:
                panels.append((_segment_integrand(f, lo, hi, "right"), [0, 1]))
            else:
                panels.append((f, [lo, hi]))
        floor = mp.mpf(10) ** (-(cfg.working_digits - 4))
        val = err = None
        for degree in (6, 8, 10):
            val = mp.mpf(0)
            err = mp.mpf(0)
            for g, rng in panels:
                v, e = mp.quad(g, rng, error=True, maxdegree=degree)
                val += v
                err += e
            if err <= cfg.quad_tol + floor * abs(val):
                break
        else:
            raise NonConvergence(f"quadrature error {mp.nstr(err, 3)} above tolerance")
    with cfg.workdps():
        return EvalResult(+val, float(err), 0, True)
