"""Exception types shared across the package."""


class GibbsProbeError(Exception):
    """Base class for all package errors."""


class EncodingError(GibbsProbeError):
    """Raised when a raw table cannot be encoded (unknown category, bad value)."""


class DimensionError(GibbsProbeError):
    """Raised when an input has the wrong dimension for the object consuming it."""


class ArityError(GibbsProbeError):
    """Raised when labels or target classes do not match a model's output arity."""


class SpecError(GibbsProbeError):
    """Raised for invalid hyperparameters or malformed model specifications."""


class SingularFitError(GibbsProbeError):
    """Raised when a closed-form fit fails due to a rank-deficient matrix."""


class TrainingDivergedError(GibbsProbeError):
    """Raised when iterative training produces a non-finite loss."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class ConvergenceError(GibbsProbeError):
    """Raised when an iterative solver stops without meeting its tolerance."""

    def __init__(self, message: str, violation: float):
        super().__init__(message)
        self.violation = violation


class NotDifferentiableError(GibbsProbeError):
    """Raised when an exact gradient is requested from a locally-flat model."""


class ConfigError(GibbsProbeError):
    """Raised for invalid or incomplete run configuration documents."""
