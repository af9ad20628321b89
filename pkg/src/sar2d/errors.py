"""Exception hierarchy shared by every module of the package."""


class Sar2dError(Exception):
    """Base class for all package errors."""


class DomainError(Sar2dError, ValueError):
    """An argument lies outside the set where an operation is defined."""


class CapacityError(Sar2dError, MemoryError):
    """A request would exceed a configured size cap."""


class SingularMatrix(Sar2dError, ArithmeticError):
    """The regressor Gram matrix is numerically singular."""


class MissingNoise(Sar2dError, ValueError):
    """A statistic needing the innovations was requested without them."""


class NonConvergence(Sar2dError, RuntimeError):
    """An iterative truncation hit its cap before reaching tolerance."""


class ParseError(Sar2dError, ValueError):
    """A configuration or data file could not be parsed or validated.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    key : str, optional
        Offending configuration key.
    line : int, optional
        1-based line number in the source text.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
