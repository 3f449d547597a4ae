"""
Typed errors raised by uosdetect.

`UoSError` derives from `Exception` rather than `ValueError`: the domain types
are pydantic models and pydantic converts a `ValueError` raised inside a
validator into a `ValidationError`. Any other exception type propagates
unchanged, so callers can catch e.g. `NotOrthogonal` directly.
"""


class UoSError(Exception):
    """Base class for all uosdetect errors."""


class RankDeficient(UoSError):
    pass


class DimensionMismatch(UoSError):
    pass


class NotOrthogonal(UoSError):
    pass


class InsufficientAmbientDim(UoSError):
    pass


class NotSymmetric(UoSError):
    pass


class NotPositiveDefinite(UoSError):
    pass


class NearSingular(NotPositiveDefinite):
    """Positive eigenvalues whose spread exceeds the relative SPD tolerance."""


class TooFewSamples(UoSError):
    pass


class DivisionByZero(UoSError, ZeroDivisionError):
    pass


class RegimeMismatch(UoSError):
    pass


class DomainError(UoSError):
    pass


class DegenerateJoint(UoSError):
    pass


class ConvergenceError(UoSError):
    pass


class TooFewTrials(UoSError):
    pass


class ConfigError(UoSError):
    """Invalid run configuration or input file."""
