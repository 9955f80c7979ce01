"""Exception hierarchy shared across the package."""


class ZerodefError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(ZerodefError):
    """Inconsistent dimensions or malformed inputs (not a failed hypothesis check)."""


class DomainError(ZerodefError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ZerodefError):
    """A network failed one of the structural hypothesis checks."""


class ParseError(ZerodefError):
    """Syntax or semantic error in a .crn document."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", col {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)


class NumericalError(ZerodefError):
    """An iterative numerical procedure failed to converge."""


class InfeasibleError(ZerodefError):
    """A well-posed request has no solution (e.g. no positive point in a class)."""
