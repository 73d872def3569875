"""Exception hierarchy shared across the package."""


class PerceptLabError(Exception):
    """Base class for all package errors."""


class InputError(PerceptLabError, ValueError):
    """Malformed input data (frames, clips, vectors)."""


class UsageError(PerceptLabError, ValueError):
    """An API was called with incompatible arguments, e.g. mismatched dimensions."""


class ConfigurationError(PerceptLabError, ValueError):
    """An invalid or inconsistent configuration."""


class FormatError(PerceptLabError, ValueError):
    """A file on disk does not follow its declared format."""


class TrainingError(PerceptLabError, RuntimeError):
    """Training diverged."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class UndefinedCorrelationError(PerceptLabError, ValueError):
    """Pearson correlation is undefined for constant input."""
