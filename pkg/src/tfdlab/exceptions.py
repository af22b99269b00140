"""Exception types shared across the package."""


class PreconditionViolation(ValueError):
    """Inputs are well-formed but violate a mathematical precondition.

    Example: an initial value that vanishes somewhere on the interval,
    which makes the identification experiments meaningless.
    """


class SolverFailure(RuntimeError):
    """A numerical solve could not produce a result."""


class ConvergenceError(SolverFailure):
    """An iteration hit its budget before reaching the requested tolerance."""

    def __init__(self, message, last_update=None, iterations=None):
        super().__init__(message)
        self.last_update = last_update
        self.iterations = iterations
