"""Exception hierarchy.

Everything numeric derives from :class:`VdPError`; the CLI maps
:class:`ConfigError` to exit code 1 and every other :class:`VdPError` to 2.
"""


class VdPError(Exception):
    """Base class for all errors raised by sqvdp."""


class ConfigError(VdPError, ValueError):
    """Invalid user input: bad configuration key, value or CLI usage."""


class DimensionError(VdPError, ValueError):
    pass


class FockRangeError(VdPError, IndexError):
    pass


class PreconditionError(VdPError, ValueError):
    pass


class SolverError(VdPError, RuntimeError):
    """A linear solve finished but failed its residual certificate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateSteadyStateError(SolverError):
    pass


class NoConvergenceError(VdPError, RuntimeError):
    pass


class StiffnessError(VdPError, RuntimeError):
    """Adaptive step size fell below its floor."""


class TruncationError(VdPError, RuntimeError):
    """A correlation function had not decayed when integration stopped."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GridTooNarrowError(VdPError, ValueError):
    pass


class AccuracyError(VdPError, RuntimeError):
    pass


class UndefinedObservableError(VdPError, ValueError):
    pass


class PhaseSingularityError(VdPError, RuntimeError):
    pass


class NoLockError(VdPError, ValueError):
    """Parameters lie outside the squeezing Arnold tongue."""


class SweepError(VdPError, RuntimeError):
    pass
