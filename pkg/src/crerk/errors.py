"""Exception hierarchy shared by every module of the package."""


class ERKError(Exception):
    """Base class for all errors raised by :mod:`crerk`."""


class InvalidInputError(ERKError, ValueError):
    """Non-finite or malformed numerical input."""


class ExpmOverflowError(ERKError, OverflowError):
    """The squaring phase of the matrix exponential overflowed."""


class UnsupportedOrderError(ERKError, ValueError):
    """An order or phi index outside the supported catalogue was requested."""


class InvalidParameterError(ERKError, ValueError):
    """A problem or routine parameter is outside its admissible range."""


class UnknownMethodError(ERKError, ValueError):
    """The requested scheme name is not in the catalogue."""


class InvalidGridError(ERKError, ValueError):
    """The time interval is not an integer multiple of the stepsize."""


class SingularStageError(ERKError, ArithmeticError):
    """The linear part of the implicit stage equations is singular."""


class NonConvergenceError(ERKError, RuntimeError):
    """The stage iteration did not reach the requested tolerance.

    Attributes
    ----------
    residual : float
        Norm of the last successive-iterate difference.
    iterations : int
        Number of iterations performed.
    step_index : int or None
        Index of the failing step when raised from :func:`crerk.integrators.integrate`.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step_index = None


class UnreliableReferenceError(ERKError, RuntimeError):
    """A fine-grid reference failed its self-consistency check."""
