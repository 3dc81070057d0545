"""The two harmonic Maass forms used throughout, packaged as data.

A :class:`FormSpec` carries the weight, level, constant terms and
coefficient generators of a form f and of its Fricke image g = f|w_N,
where f|w_N(tau) = N^{k/2} (N tau)^{-k} f(-1/(N tau)).  The b-table may be
stored in another unit normalization; ``fricke_phase`` is the unit factor
with f|w_N = fricke_phase * (expansion built from the b-table).
Scalar generators return mpmath numbers; :meth:`FormSpec.arrays` returns
the same coefficients as complex128 numpy arrays for bulk series work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath as mp
import numpy as np

from . import arith
from .errors import InvalidK
from .numkernel import DEFAULT_CONFIG, PrecisionConfig

EPSILON = 0.01

__all__ = [
    "FormSpec",
    "RhoRange",
    "zagier_form",
    "eisenstein_p_form",
    "rho_threshold",
    "ipow",
    "EPSILON",
]


def ipow(k) -> mp.mpc:
    """i^k on the principal branch, e^{i pi k / 2}."""
    if isinstance(k, Fraction):
        k = mp.mpf(k.numerator) / k.denominator
    return mp.expjpi(mp.mpf(k) / 2)


@dataclass(frozen=True)
class RhoRange:
    rho_0: float
    extended: bool

    @property
    def lower(self) -> float:
        """Infimum of admissible rho (extended range when it applies)."""
        return self.rho_0 - (1.5 if self.extended else 0.5)

    def admits(self, rho) -> bool:
        return rho > self.lower


@dataclass(frozen=True, eq=False)
class FormSpec:
    name: str
    k: Fraction
    N: int
    a_plus: Callable[[int], object]
    a_minus: Callable[[int], object]
    b_plus: Callable[[int], object]
    b_minus: Callable[[int], object]
    a0_plus: object
    a0_minus: object
    b0_plus: object
    b0_minus: object
    mu_f_plus: float
    mu_f_minus: float
    mu_g_plus: float
    mu_g_minus: float
    minus_support: str
    bulk: Callable[[int], dict] | None = field(default=None, repr=False)
    fricke_phase: complex = 1
    plus_values: Callable[[int], list] | None = field(default=None, repr=False)
    _arrays: dict = field(default_factory=dict, repr=False)

    @property
    def kf(self) -> mp.mpf:
        return mp.mpf(self.k.numerator) / self.k.denominator

    def minus_indices(self, nmax: int) -> list[int]:
        """Indices 1 <= n <= nmax where a^-(n), b^-(n) can be non-zero."""
        if nmax < 1:
            return []
        if self.minus_support == "squares":
            return [m * m for m in range(1, math.isqrt(int(nmax)) + 1)]
        return list(range(1, int(nmax) + 1))

    def a_plus_values(self, nmax: int) -> list:
        """[a+(1), ..., a+(nmax)] at working precision, memoized."""
        cached = self._arrays.get("plus", [])
        if len(cached) < nmax:
            if self.plus_values is not None:
                cached = self.plus_values(nmax)
            else:
                cached = cached + [self.a_plus(n) for n in range(len(cached) + 1, nmax + 1)]
            self._arrays["plus"] = cached
        return cached[:nmax]

    def arrays(self, nmax: int) -> dict:
        """complex128 arrays 'a+', 'a-', 'b+', 'b-' indexed 0..nmax (entry 0 unused)."""
        cached = self._arrays.get("data")
        if cached is not None and len(cached["b+"]) > nmax:
            return {key: v[: nmax + 1] for key, v in cached.items()}
        size = max(nmax, 2 * (len(cached["b+"]) - 1) if cached else 0)
        if self.bulk is not None:
            data = self.bulk(size)
        else:
            data = {}
            for key, gen in (("a+", self.a_plus), ("a-", self.a_minus),
                             ("b+", self.b_plus), ("b-", self.b_minus)):
                arr = np.zeros(size + 1, dtype=complex)
                for n in range(1, size + 1):
                    arr[n] = complex(gen(n))
                data[key] = arr
        self._arrays["data"] = data
        return {key: v[: nmax + 1] for key, v in data.items()}


# ------------------------------------------------------------ Zagier form

def _is_square(n: int) -> bool:
    return n > 0 and math.isqrt(n) ** 2 == n


def _zagier_extra(n: int) -> tuple[int, Fraction, int]:
    """(fundamental d of Q(sqrt(-n)), T_n, chi_{-n}(2)) for the b^+ coefficient."""
    d = arith.fundamental_discriminant(-n)[0]
    _, T = arith.r_n_and_t_n(n)
    return d, T, arith.kronecker_symbol(d, 2)


def zagier_form(cfg: PrecisionConfig | None = None) -> FormSpec:
    """Zagier's weight 3/2 form on Gamma_0(4) built from Hurwitz class numbers."""
    cfg = cfg or DEFAULT_CONFIG
    with cfg.workdps():
        pi = +mp.pi
        one_i = mp.mpc(1, 1)
        s8 = mp.sqrt(8)
        c_bp_h = one_i / s8
        c_bp_l = one_i / (2 * mp.sqrt(2) * pi)
        c_am = 1 / (4 * mp.sqrt(pi))
        c_bm = one_i / (4 * mp.sqrt(2 * pi))
        consts = dict(
            a0_plus=mp.mpf(-1) / 12,
            a0_minus=1 / (8 * pi),
            b0_plus=-one_i / (12 * s8),
            b0_minus=one_i / (8 * pi * mp.sqrt(2)),
        )

    def a_plus(n):
        h = arith.hurwitz_h(n)
        with cfg.workdps():
            return mp.mpf(h.numerator) / h.denominator

    def a_minus(n):
        with cfg.workdps():
            return c_am * mp.sqrt(n) if _is_square(n) else mp.mpf(0)

    def b_minus(n):
        with cfg.workdps():
            return c_bm * mp.sqrt(n) if _is_square(n) else mp.mpc(0)

    def b_plus(n):
        if n == 0:
            return consts["b0_plus"]
        h = arith.hurwitz_h(n)
        d, T, chi2 = _zagier_extra(n)
        lval = arith.dirichlet_l_one(arith.QuadChar(d), cfg).value
        with cfg.workdps():
            return (c_bp_h * (mp.mpf(h.numerator) / h.denominator)
                    + c_bp_l * mp.sqrt(n) * lval * (2 - chi2) * (mp.mpf(T.numerator) / T.denominator))

    def bulk(nmax):
        H6 = arith.hurwitz_table6(4 * nmax + 4)
        H = H6[: nmax + 1] / 6.0
        n = np.arange(nmax + 1)
        sq = np.zeros(nmax + 1, dtype=bool)
        r = np.arange(1, math.isqrt(nmax) + 1)
        sq[r * r] = True
        extra = np.zeros(nmax + 1)
        for m in range(1, nmax + 1):
            d, T, chi2 = _zagier_extra(m)
            h = int(H6[-d]) * arith.unit_count(d) // 12
            lval = 2 * math.pi * h / (arith.unit_count(d) * math.sqrt(-d))
            extra[m] = math.sqrt(m) * lval * (2 - chi2) * float(T)
        one_i = 1 + 1j
        ap = H.astype(complex)
        am = np.where(sq, np.sqrt(n) / (4 * math.sqrt(math.pi)), 0).astype(complex)
        bp = one_i / math.sqrt(8) * H + one_i / (2 * math.sqrt(2) * math.pi) * extra
        bm = np.where(sq, one_i * np.sqrt(n) / (4 * math.sqrt(2 * math.pi)), 0)
        for arr in (ap, am, bp, bm):
            arr[0] = 0
        return {"a+": ap, "a-": am, "b+": bp.astype(complex), "b-": bm.astype(complex)}

    def plus_values(nmax):
        H6 = arith.hurwitz_table6(nmax)
        with cfg.workdps():
            return [mp.mpf(int(t)) / 6 for t in H6[1: nmax + 1]]

    half = 0.5 + EPSILON
    return FormSpec(
        name="zagier",
        k=Fraction(3, 2),
        N=4,
        a_plus=a_plus,
        a_minus=a_minus,
        b_plus=b_plus,
        b_minus=b_minus,
        mu_f_plus=half,
        mu_f_minus=0.5,
        mu_g_plus=half,
        mu_g_minus=0.5,
        minus_support="squares",
        bulk=bulk,
        plus_values=plus_values,
        **consts,
    )


# --------------------------------------------- Eisenstein P-form, odd k >= 5

# characters with conductor up to this size get full-precision L-values;
# larger ones fall back to double precision
_MP_L_LIMIT = 64


def eisenstein_p_form(k: int, cfg: PrecisionConfig | None = None) -> FormSpec:
    """Harmonic Eisenstein series P of weight 2 - k/2 on Gamma_0(4), k odd >= 5."""
    cfg = cfg or DEFAULT_CONFIG
    if int(k) != k or k % 2 == 0 or k < 5:
        raise InvalidK(f"k must be an odd integer >= 5, got {k}")
    k = int(k)
    s_l = (k - 1) // 2

    with cfg.workdps(5):
        pi = +mp.pi
        kk = mp.mpf(k)
        C = arith.zeta_real(k - 1, cfg).value * (1 - mp.power(2, 1 - k))
        base = pi * arith.zeta_real(k - 2, cfg).value / C
        cosk = mp.cospi(kk / 4)
        g_half = mp.gamma(kk / 2 - 1)
        pref = mp.power(mp.mpc(0, -2), 2 - kk / 2) * pi / C
        # b(n) = pref * L * (inner_b + cross_b * A_k(n)); the b-table is
        # normalized to (-2i tau)^{(k-4)/2}, see fricke_phase below
        inner_b = -(2 - mp.power(2, -k)) / mp.power(mp.mpc(0, 2), kk / 2)
        cross_b = -mp.power(2, -kk / 2) * cosk
        consts = dict(
            a0_plus=-mp.power(2, 3 - 3 * kk / 2) * cosk * (3 - mp.power(2, 2 - k)) * base,
            a0_minus=mp.mpf(2),
            b0_plus=(mp.power(2, 3 - k) - 3 * mp.power(2, 3 - 2 * k)) * base,
            b0_minus=-mp.power(2, 1 - kk / 2) * cosk,
        )
        phase = complex(mp.expjpi(-(2 - kk / 2) / 2))

    def lfac(n):
        chi = arith.p_form_character(k, n)
        if abs(chi.disc) <= _MP_L_LIMIT:
            lv = arith.dirichlet_l_int(chi, s_l, cfg).value
        else:
            lv = mp.mpf(arith.l_value_float(chi.disc, s_l))
        return lv * (1 - chi(2) * mp.power(2, mp.mpf(1 - k) / 2))

    def pieces(n):
        T, A = arith.p_form_arith(k, n, cfg)
        with cfg.workdps(5):
            return lfac(n) * (mp.mpf(T.numerator) / T.denominator), A

    def a_plus(n):
        L, A = pieces(n)
        with cfg.workdps():
            return +(pref * L * A)

    def a_minus(n):
        L, A = pieces(-n)
        with cfg.workdps():
            return +(pref * L * A / g_half)

    def b_plus(n):
        L, A = pieces(n)
        with cfg.workdps():
            return +(pref * L * (inner_b + cross_b * A))

    def b_minus(n):
        L, A = pieces(-n)
        with cfg.workdps():
            return +(pref * L * (inner_b + cross_b * A) / g_half)

    def bulk(nmax):
        out = {key: np.zeros(nmax + 1, dtype=complex) for key in ("a+", "a-", "b+", "b-")}
        pa = complex(pref)
        ib, cb, gh = complex(inner_b), float(cross_b), float(g_half)
        for n in range(1, nmax + 1):
            for sgn, kp, km in ((1, "a+", "b+"), (-1, "a-", "b-")):
                m = sgn * n
                T, A = arith.p_form_arith(k, m, cfg)
                chi = arith.p_form_character(k, m)
                L = arith.l_value_float(chi.disc, s_l) * (1 - chi(2) * 2.0 ** ((1 - k) / 2)) * float(T)
                A = complex(A)
                scale = 1.0 if sgn > 0 else 1.0 / gh
                out[kp][n] = pa * L * A * scale
                out[km][n] = pa * L * (ib + cb * A) * scale
        return out

    return FormSpec(
        name=f"eisenstein-p(k={k})",
        k=Fraction(4 - k, 2),
        N=4,
        a_plus=a_plus,
        a_minus=a_minus,
        b_plus=b_plus,
        b_minus=b_minus,
        mu_f_plus=EPSILON,
        mu_f_minus=EPSILON,
        mu_g_plus=EPSILON,
        mu_g_minus=EPSILON,
        minus_support="all",
        bulk=bulk,
        fricke_phase=phase,
        **consts,
    )


def rho_threshold(form: FormSpec) -> RhoRange:
    """Validity threshold rho_0 for the summation formula of a form."""
    k = float(form.k)
    mus = (form.mu_f_plus, form.mu_f_minus, form.mu_g_plus, form.mu_g_minus)
    if k >= 1:
        rho0 = max(max(2 + 2 * m - k for m in mus), k)
    else:
        rho0 = max(3 + 2 * m - 2 * k for m in mus)
    return RhoRange(rho0, form.k == Fraction(3, 2))
