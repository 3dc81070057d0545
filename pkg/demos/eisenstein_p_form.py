"""
A harmonic Eisenstein series of negative weight
===============================================

For odd k >= 5 there is a harmonic Maass form of weight 2 - k/2 on Gamma_0(4)
whose coefficients are Dirichlet L-values at (k-1)/2 times finite 2-adic
factors.  Here k = 5, so the weight is -1/2.  We look at its coefficients,
confirm the Fricke relation numerically, and run the summation formula.
"""

import math

from maassum.forms import eisenstein_p_form, rho_threshold
from maassum.summation import (
    SummationParams,
    asymptotic_ratio,
    converse_check,
    main_term,
    verify_identity,
)

P = eisenstein_p_form(5)
print("weight", P.k, " admissible rho >", round(rho_threshold(P).lower, 6))

# Coefficients of both the holomorphic and the non-holomorphic part are
# non-zero for every n, unlike Zagier's form.  With the normalization used
# here they are real.
arr = P.arrays(8)
print("\n n          a+(n)                         a-(n)")
for n in range(1, 9):
    print(f" {n}   {arr['a+'][n].real: .12f}               {arr['a-'][n].real: .12f}")

# The Fricke relation in exponential-sum form, at a few heights y.  Both
# sides are sums of size one, so the residual is a relative error.
print("\n  y     Fricke residual")
for y in (0.5, 1.0, 2.0, 4.0):
    res = converse_check(P, y)
    print(f" {y:4.1f}   {float(abs(res.value)) / res.err:.1e}")

# The summation formula itself, well inside the admissible range.
rep = verify_identity(P, SummationParams(rho=5, x=30.5))
print(f"\nrho = 5, x = 30.5: relative residual {rep.rel_residual:.2e}")

# Since the weight is below 1 the main term grows like x^{rho+1}, with the
# real constant -2^{2-k} pi cos(pi k/4) = pi sqrt(2)/16 for k = 5.
print("\nconstant of the main term:", main_term(P, 5, 1.0).real * math.gamma(7),
      "expected", math.pi * math.sqrt(2) / 16)
print("\n      x    weighted sum / main term")
for x in (1e2, 1e3):
    print(f"{x:7.0f}    {asymptotic_ratio(P, 5, x).real:.6f}")
