"""Exception types raised by the library."""

import numpy as np


class MaedError(Exception):
    """Base class for all errors raised by maedsim."""


class DimensionError(MaedError, ValueError):
    """Operands have non-conformal shapes."""


class NotPositiveDefiniteError(MaedError, np.linalg.LinAlgError):
    """A Gram matrix that should be positive definite is not (numerically)."""


class ConvergenceError(MaedError):
    """An iterative routine hit its iteration cap before meeting tolerance.

    The best iterate found so far is kept on ``best`` so callers can decide
    whether it is good enough.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConfigError(MaedError, ValueError):
    """Inconsistent system, jammer, solver or experiment configuration."""


class FrameError(MaedError):
    """A detector failed on a specific Monte-Carlo frame."""
