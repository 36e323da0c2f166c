"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: invalid input is 1, anything numerical is 2.
"""


class BSError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BSError, ValueError):
    """A precondition on an argument was violated."""


class NumericalFailure(BSError, ArithmeticError):
    """A numerical procedure did not reach its tolerance."""


class NoBoundStateError(NumericalFailure):
    """The Birman-Schwinger condition has no root inside the maximal bracket."""
