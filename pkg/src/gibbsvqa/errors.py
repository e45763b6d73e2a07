"""Exception types shared across the package.

Each maps to a CLI exit code (see :mod:`gibbsvqa.cli`).
"""


class GibbsVQAError(Exception):
    exit_code = 5


class InvalidArgumentError(GibbsVQAError, ValueError):
    exit_code = 2


class InputError(GibbsVQAError):
    """Malformed or mismatched input file."""

    exit_code = 3


class CapacityError(GibbsVQAError):
    exit_code = 4


class DomainError(GibbsVQAError, ValueError):
    """Quantity is mathematically undefined (infinite) for the given input."""

    exit_code = 2


class InvariantError(GibbsVQAError):
    exit_code = 5
