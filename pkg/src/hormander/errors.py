"""Exception hierarchy shared by all modules."""


class HormanderError(Exception):
    """Base class for errors raised by this package."""


class InvalidInput(HormanderError, ValueError):
    """Malformed arguments: unsorted tables, non-positive values, bad shapes."""


class PreconditionError(HormanderError, ValueError):
    """An operation was called on an object that does not meet its requirements."""


class EvaluationError(HormanderError, ArithmeticError):
    """A parameter expression produced a non-finite or non-positive value."""


class NumericalFailure(HormanderError, RuntimeError):
    """A linear solve or iteration failed.

    ``detail`` carries a condition estimate or residual when one is available.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail
