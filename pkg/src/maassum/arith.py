"""Exact arithmetic: Hurwitz class numbers, quadratic characters, L-values.

Rational quantities are returned as :class:`fractions.Fraction`, which is
always in lowest terms with a positive denominator.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy import special as sps

from .errors import (
    EvenK,
    NegativeArgument,
    NonNegativeInput,
    NotFundamental,
    OutOfDomain,
    TrivialCharacter,
    ZeroN,
)
from .numkernel import DEFAULT_CONFIG, EvalResult, PrecisionConfig

RationalValue = Fraction

# disc value standing for the trivial character (every a maps to 1)
TRIVIAL_DISC = 1


class ArithCache:
    """Thread-safe memo tables keyed by integer arguments.

    Cached values are exactly the values a cold computation returns; the
    cache only ever saves time.
    """

    def __init__(self):
        self._tables: dict[str, dict] = {}
        self._lock = threading.Lock()

    def get(self, table: str, key, compute):
        tab = self._tables.get(table)
        if tab is not None and key in tab:
            return tab[key]
        value = compute()
        with self._lock:
            self._tables.setdefault(table, {})[key] = value
        return value

    def clear(self):
        with self._lock:
            self._tables.clear()

    def size(self, table: str) -> int:
        return len(self._tables.get(table, {}))


CACHE = ArithCache()


# ---------------------------------------------------------------- factoring

@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of |n| by trial division, as ((p, e), ...)."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("cannot factor 0")
    out = []
    for p in (2, 3):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
        p += step
        step = 6 - step
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def sigma_k(n: int, k: int) -> int:
    if n < 1 or k < 0:
        raise ValueError("sigma_k needs n >= 1 and k >= 0")
    total = 1
    for p, e in factorize(n):
        total *= sum(p ** (k * i) for i in range(e + 1))
    return total


def moebius(n: int) -> int:
    if n < 1:
        raise ValueError("moebius needs n >= 1")
    fac = factorize(n) if n > 1 else ()
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def lambda1(n: int) -> int:
    """Sum over divisors d of n of min(d, n/d)."""
    if n < 1:
        raise ValueError("lambda1 needs n >= 1")
    return sum(min(d, n // d) for d in divisors(n))


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Write n = t * m^2 with t squarefree (t carries the sign of n)."""
    if n == 0:
        raise ZeroN("0 has no squarefree decomposition")
    t, m = (1 if n > 0 else -1), 1
    for p, e in factorize(n):
        m *= p ** (e // 2)
        if e % 2:
            t *= p
    return t, m


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


# ------------------------------------------------------------- characters

_TAB2 = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers."""
    a, b = int(a), int(n)
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    v = 0
    while b % 2 == 0:
        v += 1
        b //= 2
    k = 1 if v % 2 == 0 else _TAB2[a & 7]
    if b < 0:
        b = -b
        if a < 0:
            k = -k
    while True:
        if a == 0:
            return k if b == 1 else 0
        v = 0
        while a % 2 == 0:
            v += 1
            a //= 2
        if v % 2:
            k *= _TAB2[b & 7]
        if a & b & 2:
            k = -k
        r = abs(a)
        a = b % r
        b = r


def is_fundamental(d: int) -> bool:
    if d == 1 or d == 0:
        return False
    if d % 4 == 1:
        return squarefree_decompose(d)[1] == 1
    if d % 4 == 0:
        q = d // 4
        return q % 4 in (2, 3) and squarefree_decompose(q)[1] == 1
    return False


@dataclass(frozen=True)
class QuadChar:
    """The character a -> (disc / a).  disc = 1 is the trivial character."""

    disc: int
    modulus: int = 0

    def __post_init__(self):
        if self.disc % 4 not in (0, 1):
            raise ValueError(f"{self.disc} is not 0 or 1 mod 4")
        if self.modulus == 0:
            object.__setattr__(self, "modulus", max(1, abs(self.disc)))

    @property
    def is_trivial(self) -> bool:
        return self.disc == TRIVIAL_DISC

    def __call__(self, a: int) -> int:
        if self.is_trivial:
            return 1
        return kronecker_symbol(self.disc, a)

    def values(self, a: np.ndarray) -> np.ndarray:
        return chi_array(self.disc, a)


def fundamental_discriminant(m: int) -> tuple[int, int]:
    """Fundamental discriminant d of Q(sqrt(m)) for m < 0, with a conductor f.

    f satisfies d f^2 = m when m is 0 or 1 mod 4, and d f^2 = 4m otherwise
    (for example -9 gives (-4, 3)).  As m < 0, Q(sqrt(m)) is never Q, so the
    trivial character never arises here.
    """
    if m >= 0:
        raise NonNegativeInput(f"expected a negative integer, got {m}")
    t, g = squarefree_decompose(m)
    if t % 4 == 1:
        return t, g
    d = 4 * t
    return (d, g // 2) if g % 2 == 0 else (d, g)


def chi_minus(n: int) -> QuadChar:
    """Character of Q(sqrt(-n)) for n > 0."""
    return QuadChar(fundamental_discriminant(-n)[0])


def chi_array(disc: int, a) -> np.ndarray:
    """Kronecker symbols (disc / a) for an array of positive integers a."""
    a = np.asarray(a, dtype=np.int64)
    if disc == TRIVIAL_DISC:
        return np.ones_like(a)
    out = np.ones_like(a)
    # split a = 2^v a' with a' odd
    odd = a.copy()
    v = np.zeros_like(a)
    while True:
        even = (odd % 2) == 0
        if not even.any():
            break
        odd[even] //= 2
        v[even] += 1
    if disc % 2 == 0:
        out[v > 0] = 0
    else:
        two = _TAB2[disc & 7]
        out *= np.where(v % 2 == 1, two, 1)
    if disc < 0:
        out *= np.where(odd % 4 == 3, -1, 1)
    for p, e in factorize(disc):
        if e % 2 == 0:
            out *= np.where(np.gcd(odd, p) == 1, 1, 0)
            continue
        if p == 2:
            r8 = odd % 8
            out *= np.where((r8 == 1) | (r8 == 7), 1, -1)
            continue
        table = _legendre_table(p)
        sym = table[odd % p]
        # reciprocity between odd p and odd a'
        if p % 4 == 3:
            sym = np.where(odd % 4 == 3, -sym, sym)
        out *= sym
    return out


@lru_cache(maxsize=4096)
def _legendre_table(p: int) -> np.ndarray:
    t = -np.ones(p, dtype=np.int64)
    t[0] = 0
    t[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
    return t


# ------------------------------------------------------ Hurwitz numbers

def _hurwitz_enumerate(n: int) -> Fraction:
    if n % 4 in (1, 2):
        return Fraction(0)
    total = Fraction(0)
    a = 1
    while 3 * a * a <= n:
        for b in range(-a + 1, a + 1):
            if (b * b + n) % (4 * a):
                continue
            c = (b * b + n) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if a == b == c:
                total += Fraction(1, 3)
            elif b == 0 and a == c:
                total += Fraction(1, 2)
            else:
                total += 1
        a += 1
    return total


def hurwitz_h(n: int) -> Fraction:
    """Hurwitz class number H(n) with H(0) = -1/12."""
    n = int(n)
    if n < 0:
        raise NegativeArgument(f"H(n) needs n >= 0, got {n}")
    if n == 0:
        return Fraction(-1, 12)
    return CACHE.get("H", n, lambda: _hurwitz_enumerate(n))


_table_lock = threading.Lock()
_table6: np.ndarray = np.zeros(1, dtype=np.int64)


def hurwitz_table6(nmax: int) -> np.ndarray:
    """Array t with t[n] = 6 H(n) for 1 <= n <= nmax (t[0] = 0).

    Built by sweeping all reduced forms at once, so it is much faster than
    repeated calls to :func:`hurwitz_h`.
    """
    global _table6
    if len(_table6) > nmax:
        return _table6[: nmax + 1]
    size = max(nmax, 2 * (len(_table6) - 1), 64)
    t = np.zeros(size + 1, dtype=np.int64)
    a = 1
    while 3 * a * a <= size:
        for b in range(-a + 1, a + 1):
            c0 = a if b >= 0 else a + 1
            cmax = (size + b * b) // (4 * a)
            if cmax < c0:
                continue
            c = np.arange(c0, cmax + 1, dtype=np.int64)
            t[4 * a * c - b * b] += 6
            if b >= 0 and c0 == a:
                d0 = 4 * a * a - b * b
                if b == 0:
                    t[d0] -= 3
                elif b == a:
                    t[d0] -= 4
        a += 1
    with _table_lock:
        if len(_table6) <= nmax:
            _table6 = t
    return t[: nmax + 1]


def hurwitz_table(nmax: int) -> list[Fraction]:
    """[H(0), ..., H(nmax)] as exact fractions."""
    t6 = hurwitz_table6(nmax)
    out = [Fraction(-1, 12)]
    out += [Fraction(int(v), 6) for v in t6[1:]]
    return out


def hurwitz_kronecker_check(n: int, table: list[Fraction] | None = None) -> Fraction:
    """Sum over r of H(4n - r^2), plus lambda1(n) minus 2 sigma_1(n)."""
    if n < 1:
        raise ValueError("n must be positive")
    H = table if table is not None else hurwitz_table(4 * n)
    total = Fraction(0)
    r = 0
    while r * r <= 4 * n:
        total += H[4 * n - r * r] * (1 if r == 0 else 2)
        r += 1
    return total + lambda1(n) - 2 * sigma_k(n, 1)


# ------------------------------------------------------ class numbers

def unit_count(d: int) -> int:
    return 6 if d == -3 else 4 if d == -4 else 2


def class_number(d: int) -> int:
    """Number of reduced forms of discriminant d (d < 0 fundamental)."""
    if d >= 0 or not is_fundamental(d):
        raise NotFundamental(f"{d} is not a negative fundamental discriminant")
    n = -d
    if n <= len(_table6) - 1:
        h6 = int(_table6[n])
    else:
        h6 = int(6 * hurwitz_h(n))
    # every form of fundamental discriminant is primitive
    return h6 * unit_count(d) // 12


def class_numbers_array(dmax: int) -> np.ndarray:
    """h[n] = class number of -n where -n is fundamental (else garbage)."""
    t6 = hurwitz_table6(dmax)
    n = np.arange(dmax + 1)
    w = np.where(n == 3, 6, np.where(n == 4, 4, 2))
    return t6 * w // 12


# ------------------------------------------------------------ L-values

def dirichlet_l_one(char: QuadChar, cfg: PrecisionConfig | None = None) -> EvalResult:
    """L(chi_d, 1) = 2 pi h(d) / (w(d) sqrt|d|) for fundamental d < 0."""
    cfg = cfg or DEFAULT_CONFIG
    if char.is_trivial:
        raise TrivialCharacter("L(s) of the trivial character has a pole at s = 1")
    d = char.disc
    h = class_number(d)
    with cfg.workdps():
        val = 2 * mp.pi * h / (unit_count(d) * mp.sqrt(-d))
        return EvalResult(val, float(abs(val)) * cfg.eps * 10, 0, True)


def dirichlet_l_int(char: QuadChar, m: int, cfg: PrecisionConfig | None = None) -> EvalResult:
    """L(chi, m) for an integer m >= 2.

    chi has period q = |disc|, so the Dirichlet series splits exactly into
    q^{-m} sum_{a <= q} chi(a) zeta(m, a/q) with Hurwitz zeta values.  The
    trivial character gives zeta(m).
    """
    cfg = cfg or DEFAULT_CONFIG
    if m < 2 or int(m) != m:
        raise ValueError("m must be an integer >= 2")
    with cfg.workdps(5):
        if char.is_trivial:
            val = mp.zeta(m)
            terms = 1
        else:
            q = abs(char.disc)
            a = np.arange(1, q + 1)
            chis = chi_array(char.disc, a)
            val = mp.mpf(0)
            for ai, ci in zip(a.tolist(), chis.tolist()):
                if ci:
                    val += ci * mp.zeta(m, mp.mpf(ai) / q)
            val /= mp.mpf(q) ** m
            terms = q
    with cfg.workdps():
        val = +val
        return EvalResult(val, float(abs(val)) * cfg.eps * 10 + cfg.eps, terms, True)


def dirichlet_l_direct(char: QuadChar, m: int, nterms: int) -> EvalResult:
    """Truncated Dirichlet series with the tail bound of the integral test.

    The bound |tail| <= nterms^{1-m} / (m-1) is crude but rigorous.  Works in
    double precision and is intended as a reference for small tolerances.
    """
    n = np.arange(1, nterms + 1, dtype=np.int64)
    chis = chi_array(char.disc, n).astype(float)
    terms = chis / n.astype(float) ** m
    # pairwise summation in numpy keeps rounding at O(log n) ulps
    val = float(np.sum(terms))
    tail = nterms ** (1 - m) / (m - 1)
    return EvalResult(val, tail, nterms, True)


_l_float_cache: dict[tuple[int, int], float] = {}


# conductors from here on use the smoothed functional equation
_AFE_MIN_CONDUCTOR = 2000


def _upper_gamma_array(a: float, x: np.ndarray) -> np.ndarray:
    """Non-regularized Gamma(a, x) for real a of any sign, x > 0."""
    if a > 0:
        return sps.gamma(a) * sps.gammaincc(a, x)
    steps = math.ceil(-a) if a < 0 else 0
    top = a + steps
    val = sps.exp1(x) if top == 0 else sps.gamma(top) * sps.gammaincc(top, x)
    cur = top
    for _ in range(steps):
        cur -= 1
        val = (val - x**cur * np.exp(-x)) / cur
    return val


def _l_hurwitz(disc: int, m: int) -> float:
    q = abs(disc)
    a = np.arange(1, q + 1, dtype=np.int64)
    chis = chi_array(disc, a)
    keep = chis != 0
    z = sps.zeta(float(m), a[keep] / q)
    return float(np.dot(chis[keep].astype(float), z)) / float(q) ** m


def _l_smoothed(d0: int, m: int) -> float:
    """L(chi_d0, m) for a fundamental discriminant d0 by the theta-function split.

    With q = |d0|, parity a (chi(-1) = (-1)^a) and root number 1,
    Gamma((m+a)/2) L = sum chi(n) n^{-m} Gamma((m+a)/2, pi n^2/q)
                     + (pi/q)^{m-1/2} sum chi(n) n^{m-1} Gamma((1-m+a)/2, pi n^2/q).
    """
    q = abs(d0)
    par = 0 if d0 > 0 else 1
    nmax = int(math.sqrt(45.0 * q / math.pi)) + 2
    n = np.arange(1, nmax + 1, dtype=np.int64)
    chis = chi_array(d0, n).astype(float)
    nf = n.astype(float)
    t = math.pi * nf * nf / q
    first = np.dot(chis * nf ** (-m), _upper_gamma_array((m + par) / 2, t))
    second = np.dot(chis * nf ** (m - 1), _upper_gamma_array((1 - m + par) / 2, t))
    return float((first + (math.pi / q) ** (m - 0.5) * second) / math.gamma((m + par) / 2))


def _primitive_part(disc: int) -> tuple[int, int]:
    # disc = d0 f^2 with d0 fundamental (either sign)
    t, g = squarefree_decompose(disc)
    if t % 4 == 1:
        return t, g
    return 4 * t, g // 2


def l_value_float(disc: int, m: int) -> float:
    """Double-precision L(chi_disc, m), m >= 2, for the Kronecker character of disc.

    Small moduli use the Hurwitz zeta split directly.  Large ones reduce to
    the primitive character (Euler factors for the primes of the square part)
    and use the smoothed functional equation, which needs only O(sqrt q) terms.
    """
    key = (disc, m)
    hit = _l_float_cache.get(key)
    if hit is not None:
        return hit
    if disc == TRIVIAL_DISC:
        val = float(sps.zeta(m, 1.0))
    elif abs(disc) < _AFE_MIN_CONDUCTOR:
        val = _l_hurwitz(disc, m)
    else:
        d0, f = _primitive_part(disc)
        if d0 == TRIVIAL_DISC:
            base = float(sps.zeta(m, 1.0))
        elif abs(d0) < _AFE_MIN_CONDUCTOR:
            base = _l_hurwitz(d0, m)
        else:
            base = _l_smoothed(d0, m)
        for p, _ in factorize(f):
            base *= 1 - kronecker_symbol(d0, p) * float(p) ** (-m)
        val = base
    _l_float_cache[key] = val
    return val


def zeta_real(s, cfg: PrecisionConfig | None = None) -> EvalResult:
    """Riemann zeta for real s > 1 by Euler-Maclaurin summation."""
    cfg = cfg or DEFAULT_CONFIG
    if not s > 1:
        raise OutOfDomain(f"zeta_real needs s > 1, got {s}")
    with cfg.workdps(10):
        s = mp.mpf(s)
        N = 10 + cfg.working_digits
        head = mp.fsum(mp.power(n, -s) for n in range(1, N))
        tail = mp.power(N, 1 - s) / (s - 1) + mp.power(N, -s) / 2
        rising = s
        tol = mp.mpf(min(cfg.series_tol, cfg.eps)) * 1e-3
        err = mp.inf
        j = 0
        for j in range(1, 60):
            term = mp.bernoulli(2 * j) / mp.factorial(2 * j) * rising * mp.power(N, -s - 2 * j + 1)
            tail += term
            err = abs(term)
            if err < tol * abs(head):
                break
            rising *= (s + 2 * j - 1) * (s + 2 * j)
        val = head + tail
    with cfg.workdps():
        return EvalResult(+val, float(err + abs(val) * cfg.eps), N + j, bool(err <= cfg.series_tol))


# ---------------------------------------------------- T_n and P-form data

def r_n_and_t_n(n: int) -> tuple[int, Fraction]:
    """Largest odd r with r^2 | n, and T_n = (1/r) sum mu(m) chi_{-n}(m) sigma_1(r/m)."""
    if n < 1:
        raise ValueError("n must be positive")
    r = 1
    for p, e in factorize(n):
        if p != 2:
            r *= p ** (e // 2)
    if r == 1:
        return 1, Fraction(1)
    chi = chi_minus(n)
    total = sum(moebius(m) * chi(m) * sigma_k(r // m, 1) for m in divisors(r))
    return r, Fraction(total, r)


def p_form_character(k: int, n: int) -> QuadChar:
    """chi_n(a) = ((-1)^{(k+1)/2} 4t / a) where n = t m^2."""
    t, _ = squarefree_decompose(n)
    sign = -1 if ((k + 1) // 2) % 2 else 1
    return QuadChar(sign * 4 * t)


def _ipow(k) -> mp.mpc:
    """i^k on the principal branch."""
    return mp.expjpi(mp.mpf(k) / 2)


def p_form_s(nu: int, j: int, n: int) -> mp.mpc:
    """S_nu(j, n) = sum over l <= 2^j of ((-1)^nu 2^j / l) e^{2 pi i n l / 2^j}."""
    return _p_form_s_residue(nu, j, n % 2**j, mp.mp.prec)


@lru_cache(maxsize=4096)
def _p_form_s_residue(nu: int, j: int, n: int, prec: int) -> mp.mpc:
    # the sum only sees n mod 2^j
    top = (-1) ** nu * 2**j
    q = 2**j
    total = mp.mpc(0)
    for ell in range(1, q + 1, 2):
        c = kronecker_symbol(top, ell)
        if c:
            total += c * mp.expjpi(mp.mpf(2 * ((n * ell) % q)) / q)
    return total


def ord2(n: int) -> int:
    n = abs(n)
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    return v


def p_form_arith(k: int, n: int, cfg: PrecisionConfig | None = None) -> tuple[Fraction, mp.mpc]:
    """(T_{n,k}, A_k(n)) for odd k >= 5 and n != 0."""
    cfg = cfg or DEFAULT_CONFIG
    if k % 2 == 0:
        raise EvenK(f"k must be odd, got {k}")
    if k < 5:
        raise EvenK(f"k must be an odd integer >= 5, got {k}")
    if n == 0:
        raise ZeroN("n must be non-zero")

    def compute():
        _, m = squarefree_decompose(n)
        chi = p_form_character(k, n)
        T = Fraction(0)
        for d in divisors(m):
            if d % 2 == 0:
                continue
            for a in divisors(d):
                b = d // a
                mu = moebius(a)
                if mu == 0:
                    continue
                T += mu * chi(a) * Fraction(1, a ** ((k - 1) // 2)) * Fraction(1, b ** (k - 2))
        with cfg.workdps(5):
            ik = _ipow(-k)
            A = (1 + ik) / mp.mpf(2) ** k
            for j in range(2, ord2(n) + 4):
                for nu in (1, 2):
                    A += (1 + (-1) ** nu * ik) * mp.power(2, -mp.mpf(k * j) / 2) * p_form_s(nu, j, n)
        with cfg.workdps():
            return T, +A

    return CACHE.get(f"pform{k}:{cfg.working_digits}", n, compute)
