"""Exception hierarchy for the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""


class ValidationError(EngineError):
    """Input fails a structural invariant (dimension, pattern, residual)."""


class SubgroupRejection(ValidationError):
    """Block-pattern membership test failed.

    Carries the indices of the offending entries.
    """

    def __init__(self, message: str, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class SingularityError(EngineError):
    """A quantity required to be nonzero fell below the singular threshold."""

    pass


class TrackingError(EngineError):
    """Square-root path tracking failed (branch jump or vanishing value)."""

    pass


class GluingError(EngineError):
    """A global object could not be glued from local data.

    Carries the offending residuals keyed by location.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class TheoremFalsification(EngineError):
    """A numerically verified statement failed where theory says it cannot.

    Reported with a dedicated exit code by the CLI.
    """

    pass
