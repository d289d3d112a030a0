"""Exception types shared across the package.

Every failure mode gets its own class so callers (and the command line
driver) can map problems to exit codes without string matching.
"""


class FgnControlError(Exception):
    """Base class for all package errors."""


class ConfigError(FgnControlError, ValueError):
    """Malformed or inconsistent configuration input."""


class InvalidSpec(FgnControlError, ValueError):
    """A problem specification violates its own constraints."""


class NotSymmetric(InvalidSpec):
    """A covariance matrix is not symmetric."""


class NotPositiveDefinite(FgnControlError, ValueError):
    """A Cholesky pivot fell below tolerance; matrix is not usable."""


class UnsupportedOrder(FgnControlError, ValueError):
    """Quadrature order outside the supported range."""


class LatticeTooLarge(FgnControlError, ValueError):
    """Requested lattice would exceed the hard path-count cap."""


class IndexOutOfRange(FgnControlError, IndexError):
    """Stage or node index outside the valid range."""


class LevelMismatch(FgnControlError, ValueError):
    """Adapted values live on incompatible information levels."""


class DepthMismatch(FgnControlError, ValueError):
    """Lattice depth is insufficient for the requested computation."""


class NonFiniteValue(FgnControlError, ArithmeticError):
    """A NaN or infinity appeared where a finite number is required."""


class OutOfControlSet(FgnControlError, ValueError):
    """A control value escaped the admissible set."""


class TerminalConditionViolated(FgnControlError, ValueError):
    """Stage-N coefficients that must vanish identically do not."""


class DerivativeMismatch(InvalidSpec):
    """Supplied derivative disagrees with finite differences of the value."""


class DualityMismatch(FgnControlError, ArithmeticError):
    """Primal and adjoint forms of the directional derivative disagree."""


class NoDescent(FgnControlError, RuntimeError):
    """Backtracking line search failed to produce sufficient decrease."""


class NotConverged(FgnControlError, RuntimeError):
    """Iteration budget exhausted before the tolerance was met."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class WrongHorizon(FgnControlError, ValueError):
    """Operation requires a specific horizon length."""
