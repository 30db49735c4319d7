"""Exception hierarchy shared by every module."""


class PredSeqError(Exception):
    """Base class for all library errors."""


class InvalidVector(PredSeqError, ValueError):
    """A vector contains NaN or infinite entries."""


class DomainError(PredSeqError, ValueError):
    """A point lies outside the domain where an operation is defined."""


class SolverError(PredSeqError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, decrement=None):
        super().__init__(message)
        self.decrement = decrement


class FeedbackError(PredSeqError, ValueError):
    """Feedback from the environment violates the learner's contract."""


class ConfigError(PredSeqError, ValueError):
    """An incompatible or malformed configuration."""


class ModeError(PredSeqError, ValueError):
    """An operation was requested in a feedback mode that does not allow it."""


class SizeError(PredSeqError, ValueError):
    """Problem size exceeds what an exhaustive routine can handle."""


class CalibrationError(PredSeqError, RuntimeError):
    """No candidate constant satisfied the perturbation inequality."""


class ContractError(PredSeqError, ValueError):
    """A user-supplied callback broke its documented contract."""


class ExportError(PredSeqError, OSError):
    """Results could not be written."""
