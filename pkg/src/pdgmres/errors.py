"""Exception types shared across the package."""


class PdGmresError(Exception):
    """Base class for all errors raised by this package."""


class MatrixMarketError(PdGmresError, ValueError):
    """Raised when a Matrix Market stream cannot be parsed.

    ``line`` is the 1-based line number of the offending input line, or
    ``None`` when the problem is not tied to a single line.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(PdGmresError, ValueError):
    """Raised when operand shapes do not agree."""


class DivergenceError(PdGmresError, ArithmeticError):
    """Raised when a solve produces non-finite values."""


class FactorizationError(PdGmresError, ArithmeticError):
    """Raised when an incomplete factorization hits a zero pivot."""


class HeuristicUndefinedError(PdGmresError, ValueError):
    """Raised when the averaged runtime heuristic has no in-window data."""
