"""Exception types shared across the package."""


class DCGridError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DCGridError, ValueError):
    """Input violates a documented precondition (shape, sign, symmetry...)."""


class NumericFailureError(DCGridError, ArithmeticError):
    """A numerical routine failed: singular solve, non-convergence, overflow."""
