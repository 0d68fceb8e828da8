"""Exception hierarchy shared by all intdiff modules."""


class IntdiffError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IntdiffError, ValueError):
    """Input data or parameters violate a documented precondition."""


class SizeError(ValidationError):
    """Input has too few (or too many) rows/columns for the operation."""


class AlignmentError(ValidationError):
    """Row identities of two datasets do not line up."""


class NumericalError(IntdiffError, ArithmeticError):
    """A numerical routine failed; the message carries diagnostics."""


class ParseError(IntdiffError, ValueError):
    """A file could not be parsed; the message names the offending offset."""
