"""
Riesz means of Hurwitz class numbers
====================================

Hurwitz class numbers H(n) count binary quadratic forms of discriminant -n,
weighted by their automorphisms.  This walk-through computes them, checks the
classical class-number relation, and watches the weighted sums
sum_{n <= x} H(n) (x - n)^rho approach their main term.
"""

from fractions import Fraction

from maassum import arith
from maassum.forms import zagier_form
from maassum.summation import asymptotic_ratio, error_term_ratio, weighted_power_sum

# The first few values.  Halves occur at n = 4m^2 and thirds at n = 3m^2,
# coming from the forms x^2 + y^2 and x^2 + xy + y^2.
print("n    H(n)")
for n in (0, 3, 4, 7, 8, 11, 12, 15, 16, 23, 27):
    print(f"{n:<4d} {arith.hurwitz_h(n)}")

# sum_r H(4n - r^2) = 2 sigma(n) - lambda1(n), exactly.  The check returns
# the difference, in rational arithmetic.
table = arith.hurwitz_table(4 * 200)
defects = {arith.hurwitz_kronecker_check(n, table) for n in range(1, 201)}
print("\nclass-number relation defects for n <= 200:", defects)

# The weighted sum divided by rho! for a small case, by hand and by the library.
zagier = zagier_form()
x, rho = Fraction(21, 2), 2
by_hand = sum(arith.hurwitz_h(n) * (x - n) ** rho for n in range(1, 11)) / 2
print(f"\nweighted sum at rho=2, x=10.5: {by_hand} = {float(by_hand):.12f}")
print(f"library value:                 {complex(weighted_power_sum(zagier, rho, float(x))).real:.12f}")

# Growth: the sum behaves like pi^{3/2} x^{rho+3/2} / (24 Gamma(rho+5/2)).
# The ratio to that main term creeps up to 1; the non-holomorphic correction
# (from the squares n = m^2) is what closes most of the remaining gap.
print("\n      x    ratio (holomorphic)   ratio (+ correction)")
for x in (1e2, 1e3, 1e4):
    bare = asymptotic_ratio(zagier, 2, x, include_nonholo=False).real
    full = asymptotic_ratio(zagier, 2, x).real
    print(f"{x:7.0f}    {bare:.6f}              {full:.6f}")

# The next term is of size x^{rho+1}.  Normalized by the customary constant
# -3 sqrt(2)/16 the ratio settles near 0.943 = 4/(3 sqrt 2): the full coefficient
# is -1/4, as the numbers show.
print("\n      x    error-term ratio, rho = 5")
for x in (1e2, 1e3, 1e4):
    print(f"{x:7.0f}    {error_term_ratio(zagier, 5, x):.6f}")
