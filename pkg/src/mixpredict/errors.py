"""Exception hierarchy shared by every module.

The CLI maps the three top-level families onto process exit codes:
``InputError`` -> 2, ``NumericalError`` -> 3, ``InfeasibleError`` -> 4.
"""


class MixPredictError(Exception):
    """Base class for all package errors."""


class InputError(MixPredictError, ValueError):
    """Malformed or out-of-contract input data."""


class NumericalError(MixPredictError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class InfeasibleError(MixPredictError):
    """The request is well-formed but cannot be carried out on this data."""


# --- simplex -----------------------------------------------------------------


class NonPositiveEntry(InputError):
    pass


class ZeroPart(NonPositiveEntry):
    """A compositional part is exactly zero; zero replacement is not done."""


class NotClosed(InputError):
    pass


class InvalidDimension(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class IlrOverflow(NumericalError, OverflowError):
    """exp() saturated so the back-transformed composition lost a part."""


# --- fpca ----------------------------------------------------------------------


class GridMismatch(InputError):
    pass


class DegenerateData(NumericalError):
    pass


# --- glm -------------------------------------------------------------------------


class DegenerateResponse(NumericalError):
    """All responses share one class, so the logistic MLE does not exist."""


class SeparationDetected(NumericalError):
    def __init__(self, message, labels=()):
        super().__init__(message)
        self.labels = tuple(labels)


class SingularHessian(NumericalError):
    pass


class ZeroVarianceColumn(NumericalError):
    def __init__(self, message, labels=()):
        super().__init__(message)
        self.labels = tuple(labels)


# --- simulate ----------------------------------------------------------------------


class ZeroVariance(NumericalError):
    pass


class TooManyFailures(NumericalError):
    pass


# --- market data / protocol ----------------------------------------------------------


class SchemaError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{', '.join(loc)}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptySubsample(InfeasibleError):
    pass
