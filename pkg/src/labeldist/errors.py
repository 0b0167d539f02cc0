"""Error and warning types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class DegenerateGrid(InvalidArgument):
    """Label grid cannot be constructed (bad bounds, step, or cardinality)."""


class DegenerateInput(InvalidArgument):
    """Input is structurally valid but statistically unusable (e.g. zero variance)."""


class DegenerateBaseline(InvalidArgument):
    """A relative measure has a zero baseline and cannot be formed."""


class NumericalDomain(ArithmeticError):
    """A value left the numerical domain of an operation (zeros under a log, non-finite loss)."""


class ParseError(ValueError):
    """Malformed text input. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OutOfRangeTarget(UserWarning):
    """A target value falls outside the label grid; mass concentrates at the nearest edge."""
