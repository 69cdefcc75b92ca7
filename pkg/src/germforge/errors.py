"""Exception types raised across the package."""


class GermforgeError(Exception):
    """Base class for every error this package raises on purpose."""


class VariableMismatch(GermforgeError, ValueError):
    pass


class NotAUnit(GermforgeError, ArithmeticError):
    pass


class NotDivisible(GermforgeError, ArithmeticError):
    """Exact division failed; ``index`` is the lowest obstructing multi-index."""

    def __init__(self, index, message=None):
        self.index = tuple(index)
        super().__init__(message or f"not divisible: obstruction at monomial {self.index}")


class StabilizationFailure(GermforgeError, RuntimeError):
    pass


class PathThroughSingularity(GermforgeError, ValueError):
    def __init__(self, z_star, message=None):
        self.z_star = z_star
        super().__init__(message or f"interpolated unit vanishes at z* = {z_star}, inside [0, 1]")


class NotSpecial(GermforgeError, ArithmeticError):
    """The homological equation has no solution of the special form.

    ``degree`` is the total degree of the lowest obstructed coefficient of the
    antiderivative.
    """

    def __init__(self, degree, message=None):
        self.degree = degree
        super().__init__(message or f"no special solution: obstruction at degree {degree}")


class NotInDf(GermforgeError, ValueError):
    pass


class NotInDfPrime(GermforgeError, ValueError):
    pass


class InputError(GermforgeError, ValueError):
    """Malformed user input (files, flags)."""
