"""Exception hierarchy shared across the package."""


class StabselError(Exception):
    """Base class for all errors raised by this package."""


class DataError(StabselError):
    """Malformed input data: CSV defects, shape or finiteness violations."""


class ConfigError(StabselError):
    """Invalid configuration, parameter range, or calibration request."""


class NumericalError(StabselError):
    """Numerical failure: non-convergence or loss of positive definiteness."""


class ConvergenceError(NumericalError):
    """Solver did not converge; carries the grid index and the final
    stationarity gap (a duality-gap surrogate) for post-mortem."""

    def __init__(self, message, grid_index=None, gap=None):
        super().__init__(message)
        self.grid_index = grid_index
        self.gap = gap
