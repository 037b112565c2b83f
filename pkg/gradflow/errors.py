"""Exception hierarchy for gradflow."""

from typing import Any, Optional


class GradflowError(Exception):
    """Base class for every error raised by the library."""


class InvalidInputError(GradflowError, ValueError):
    """An operation was called outside its preconditions."""


class ProxToleranceError(GradflowError):
    """A proximal step did not reach its declared tolerance."""

    def __init__(self, message: str, gap: float, tolerance: float):
        super().__init__(message)
        self.gap = gap
        self.tolerance = tolerance


class FlowAbortedError(GradflowError):
    """A minimizing-movement run stopped early; the samples so far are kept."""

    def __init__(self, message: str, partial: Any, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


class SardViolationError(GradflowError, ValueError):
    """A nonempty level bin has zero minimal slope."""

    def __init__(self, message: str, bin_index: int):
        super().__init__(message)
        self.bin_index = bin_index


class CertificationError(GradflowError):
    """A sample lies outside the region a certificate speaks about."""


class ConvexityError(GradflowError, ValueError):
    """An audit needs a convexity modulus the instance does not declare."""


class EquilibriumError(GradflowError):
    """An equilibrium is missing or not accurate enough."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DensityError(GradflowError, ValueError):
    """Quantile gaps are too small to reconstruct a density."""


class ExtinctionNotReachedError(GradflowError):
    """A flow never reached its extinction threshold."""


class OptimalityCertificateError(GradflowError):
    """An exact solver produced a point that fails its optimality check."""


class ConfigError(GradflowError, ValueError):
    """Invalid harness configuration."""
