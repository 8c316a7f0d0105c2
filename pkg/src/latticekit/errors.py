"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line front
end can translate failures without a lookup table.
"""


class LatticeKitError(Exception):
    exit_code = 1


class ValidationError(LatticeKitError, ValueError):
    """Invalid parameter or malformed input."""

    exit_code = 2


class MissingWeightError(ValidationError, KeyError):
    """An explicit weight model has no entry for the requested subset."""

    def __str__(self):
        return Exception.__str__(self)


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WeightMismatchError(ValidationError):
    """A stored generating vector was built for different weights."""


class BoundNotApplicableError(ValidationError):
    """The selected M violates a bound's hypothesis (e.g. M < 1)."""


class CapacityError(LatticeKitError):
    exit_code = 3

    def __init__(self, message, count=None):
        self.count = count
        super().__init__(message)


class NumericalError(LatticeKitError, ArithmeticError):
    """Near-singular solve, negative criterion or degenerate weights."""

    exit_code = 4


class DegenerateWeightsError(NumericalError):
    pass
