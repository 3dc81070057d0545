"""Summation formulas for harmonic Maass forms of polynomial growth.

Modules
-------
numkernel   special functions and quadrature at configurable precision
arith       class numbers, quadratic characters and L-values
forms       the Zagier class-number form and the P-form family as data
summation   both sides of the Riesz-mean summation formula and its corollaries
cli         command-line front end
"""

from .numkernel import DEFAULT_CONFIG, EvalResult, PrecisionConfig
from .forms import FormSpec, eisenstein_p_form, rho_threshold, zagier_form
from .summation import IdentityReport, SummationParams, verify_identity

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "EvalResult",
    "PrecisionConfig",
    "FormSpec",
    "eisenstein_p_form",
    "rho_threshold",
    "zagier_form",
    "IdentityReport",
    "SummationParams",
    "verify_identity",
    "__version__",
]
