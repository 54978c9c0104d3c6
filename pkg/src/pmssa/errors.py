"""Exception types raised by the library."""


class PmssaError(Exception):
    """Base class for all library errors."""


class ArgumentError(PmssaError, ValueError):
    """A parameter is out of its valid range."""


class PreconditionError(PmssaError, ValueError):
    """The input lacks something the operation requires (e.g. grid geometry)."""


class ValidationError(PmssaError, ValueError):
    """Data failed an invariant check (non-finite values, bad shapes)."""


class FormatError(PmssaError):
    """A matrix file does not follow the expected layout."""


class TruncationError(FormatError):
    """A matrix file payload is shorter or longer than its header declares."""


class NumericError(PmssaError, ArithmeticError):
    """A factorization failed to converge."""
