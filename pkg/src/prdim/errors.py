"""Exception hierarchy.

Errors fall into three families so the CLI can map them to exit codes:
input problems (unreadable or malformed data), precondition violations
(data that is well formed but too small or degenerate for the requested
estimator) and numerical failures.
"""


class PRDimError(Exception):
    """Base class for every error raised by this package."""


class InputError(PRDimError, ValueError):
    """The input could not be read or is not a valid matrix."""


class PreconditionError(PRDimError, ValueError):
    """The input is valid but violates an operation's preconditions."""


class NumericalError(PRDimError, ArithmeticError):
    """A computation produced an unusable result."""


class ParseError(InputError):
    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class NotTwoDimensional(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class NonFiniteEntry(NonFiniteInput):
    def __init__(self, row, col, value=None):
        shown = "" if value is None else f" {float(value)!r}"
        super().__init__(f"non-finite entry{shown} at (row={row}, col={col})")
        self.row = row
        self.col = col


class FeatureAxisTooSmall(PreconditionError):
    pass


class InsufficientRows(PreconditionError):
    pass


class InsufficientColumns(PreconditionError):
    pass


class DegenerateWeights(PreconditionError):
    pass


class ShapeMismatch(PreconditionError):
    pass


class MatrixTooLargeForOracle(PreconditionError):
    pass


class DuplicatePoints(PreconditionError):
    pass


class AllBallsDegenerate(PreconditionError):
    pass


class RowCountMismatch(PreconditionError):
    pass


class GridExceedsData(PreconditionError):
    pass


class NoValidRecords(PreconditionError):
    pass


class DegenerateKernel(NumericalError):
    pass


class InvalidEstimate(NumericalError):
    """An estimate needed downstream came back invalid (B <= 0)."""
