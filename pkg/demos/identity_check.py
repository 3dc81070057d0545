"""
Both sides of the summation formula for Zagier's form
=====================================================

The weighted class-number sum on the left is matched on the right by two
Bessel-type series built from the coefficients of the Fricke transform of
Zagier's weight 3/2 form.  This script prints every piece, then evaluates the
non-holomorphic series a second way through the shadow.
"""

from maassum.forms import rho_threshold, zagier_form
from maassum.summation import SummationParams, rhs_nonholo_integral, rhs_via_shadow, verify_identity

zagier = zagier_form()
print("admissible rho >", round(rho_threshold(zagier).lower, 6))

# One evaluation, term by term.
rep = verify_identity(zagier, SummationParams(rho=3, x=20.5))
print("\nrho = 3, x = 20.5")
for name in ("lhs_weighted", "lhs_nonholo", "residual_q", "rhs_holo", "rhs_nonholo"):
    print(f"  {name:<13s} {getattr(rep, name).real: .15e}")
print(f"  residual      {abs(rep.residual):.3e}   relative {rep.rel_residual:.3e}")
print("  terms in the Bessel series:", rep.diagnostics["rhs_holo"].terms_used)

# A few more points.  The residual is measured against the leading term of Q.
print("\n rho      x       relative residual")
for rho in (2, 3):
    for x in (20.5, 50.25, 100.75):
        r = verify_identity(zagier, SummationParams(rho=rho, x=x)).rel_residual
        print(f" {rho:<4d} {x:8.2f}     {r:.2e}")

# The series over b-(n) involves an oscillatory integral for every n.  Through
# the shadow it turns into an integral of finite power sums, with no Bessel
# functions at all; the two evaluations agree to the quoted error.
print("\nnon-holomorphic series, direct vs shadow (rho = 2, x = 20.5)")
direct = rhs_nonholo_integral(zagier, 2, 20.5, target=1e-11)
shadow = rhs_via_shadow(zagier, 2, 20.5)
print(f"  direct  {direct.value.real: .12e}  +- {direct.err:.1e}")
print(f"  shadow  {shadow.value.real: .12e}  +- {shadow.err:.1e}")

# Below rho = 3/2 the Bessel series are only conditionally convergent.  The
# result is still close, but its error is a heuristic, and it is flagged.
rep = verify_identity(zagier, SummationParams(rho=0.5, x=30.5))
print(f"\nrho = 0.5, x = 30.5: relative residual {rep.rel_residual:.1e}, "
      f"conditional = {rep.diagnostics['conditional']}")
