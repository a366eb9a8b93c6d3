"""Exception types raised by the package."""


class InvalidInputError(ValueError):
    """Malformed arguments: bad dimensions, indices out of range, non-finite data."""


class StructureError(ValueError):
    """A matrix lacks the zero/sign structure an operation requires."""


class RejectedInputError(ValueError):
    """Input is too far from unitary to be decomposed meaningfully."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ConvergenceError(RuntimeError):
    """The iteration cap was reached before all blocks deflated.

    ``state`` carries whatever partial result the driver had at the time.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
