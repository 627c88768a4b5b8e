"""Exception hierarchy shared across the package."""


class FloatlocError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FloatlocError, ValueError):
    """Input value outside its valid domain."""


class ParseError(FloatlocError, ValueError):
    """Malformed log file. ``line`` is 1-based, or None for header problems."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class OutOfRangeError(FloatlocError, ValueError):
    """Interpolation requested outside a series plus its extrapolation limit."""


class DegenerateGeometryError(FloatlocError, ValueError):
    """Estimated position coincides with an anchor."""


class IllConditionedError(FloatlocError, ArithmeticError):
    """Fisher information matrix is singular or too poorly conditioned to invert."""


class SolverError(FloatlocError, ArithmeticError):
    """Objective evaluated to a non-finite value."""


class InsufficientDataError(FloatlocError, ValueError):
    """Fewer anchors than the solve needs."""


class PreconditionError(FloatlocError, ValueError):
    """Required logs for a device are missing."""
