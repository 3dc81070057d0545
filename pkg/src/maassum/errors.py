"""Exception hierarchy shared by every module."""


class MaassumError(Exception):
    """Base class for all library errors."""


class DomainError(MaassumError, ValueError):
    """An argument lies outside the domain of the requested function."""


class PoleAtNonPositiveInteger(DomainError):
    pass


class NonPositiveX(DomainError):
    pass


class ParameterPole(DomainError):
    pass


class PoleInS(DomainError):
    pass


class OutOfConvergenceRegion(DomainError):
    pass


class NegativeArgument(DomainError):
    pass


class NonNegativeInput(DomainError):
    pass


class NotFundamental(DomainError):
    pass


class TrivialCharacter(DomainError):
    pass


class EvenK(DomainError):
    pass


class ZeroN(DomainError):
    pass


class OutOfDomain(DomainError):
    pass


class InvalidK(DomainError):
    pass


class RangeViolation(DomainError):
    pass


class NonConvergence(MaassumError, ArithmeticError):
    """An iterative method failed to reach the requested tolerance."""
