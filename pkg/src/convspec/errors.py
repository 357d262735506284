"""Exception hierarchy shared across the package.

Exit-code mapping (used by the CLI): ConfigError -> 2, SizingError -> 3,
ConvergenceError -> 4.  A failed certificate is not an error unless the
caller asked for --expect-pass (exit 5, handled in the CLI).
"""


class ConvspecError(Exception):
    """Base class for all package errors."""


class ConfigError(ConvspecError):
    """Malformed or inconsistent scenario configuration."""


class UsageError(ConvspecError):
    """API misuse: incompatible objects, wrong space, grid mismatch."""


class SizingError(ConvspecError):
    """A requested construction does not fit the grid or the box.

    Carries the maximal feasible value of the offending parameter when one
    exists (max radius, max family size, max Weyl index).
    """

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible


class ConvergenceError(ConvspecError):
    """An iterative solver did not reach the requested tolerance."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DivergentIntegralError(ConvspecError):
    """A quadrature tail estimate kept growing (e.g. heavy-tail moments)."""


class SelfAdjointnessError(ConvspecError):
    """A quadratic form produced a non-negligible imaginary residue."""
