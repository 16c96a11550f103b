"""Exception types shared across the package."""


class EnsoError(Exception):
    """Base class for errors raised by this package."""


class DomainError(EnsoError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class PreconditionError(EnsoError, ValueError):
    """A documented precondition of an operation was violated."""


class NoLandingError(EnsoError):
    """A fast fibre reaches the non-hyperbolic curve on the invariant plane
    exactly, so no attracting landing point exists."""


class NoExitError(EnsoError):
    """The way-in/way-out balance never returns to zero before the trajectory
    is captured by the stable node on the invariant plane."""


class NoRootError(EnsoError):
    """A root expected by the theory was not found in the search interval."""


class ConvergenceError(EnsoError):
    """An iterative solver failed to converge."""


class IntegrationError(EnsoError):
    """Time integration failed; carries the time reached before failure."""

    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached


class IndeterminateClassification(EnsoError):
    """Attractor statistics did not stabilize, so a trajectory class cannot
    be assigned honestly."""
