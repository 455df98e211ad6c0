"""Exception types raised by selfaffine."""


class SingularSystem(ArithmeticError):
    """A pivot collapsed during elimination.

    Usually means a map is not contractive and slipped past validation.
    """


class ParseError(ValueError):
    """Malformed IFS document."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InvalidModel(ValueError):
    """Raised when an exact solver is handed a model that fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("model failed validation: " + "; ".join(report.failures()))


class NoConvergence(RuntimeError):
    """Fixed-point iteration hit ``max_iter`` before reaching ``tol``."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class IndexOutOfRange(IndexError):
    pass


class InvalidArgument(ValueError):
    pass


class DimensionUnsupported(ValueError):
    pass


class PreconditionError(ValueError):
    """An operation's precondition does not hold for the given model."""
