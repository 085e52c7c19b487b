"""Exception types raised by the solvers and the harness."""


class StochDRError(Exception):
    """Base class for package errors."""


class NewtonDivergedError(StochDRError):
    """Newton iteration hit its cap with the residual above tolerance."""

    def __init__(self, message, residual=None, index=None):
        super().__init__(message)
        self.residual = residual
        self.index = index


class LambdaNuTooLargeError(StochDRError, ValueError):
    """lambda * nu >= 1, so the H-geometry resolvent loses coercivity."""


class SingularStepError(StochDRError):
    """A time-step matrix of the evolution resolvent is numerically singular."""


class ConfigError(StochDRError, ValueError):
    """Invalid or incompatible run configuration."""


class RunFailedError(StochDRError):
    """More than the tolerated fraction of Monte Carlo paths failed."""
