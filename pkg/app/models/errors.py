class SpectralError(Exception):
    """Base class for every error raised by the toolkit."""


class RangeError(SpectralError, ValueError):
    pass


class NotMonotoneError(SpectralError, ValueError):
    pass


class CorrectionIndexError(SpectralError, IndexError):
    pass


class ConvergenceError(SpectralError, ArithmeticError):
    pass


class NotPositiveDefiniteError(SpectralError, ArithmeticError):
    pass


class SizeError(SpectralError, ValueError):
    pass


class SizeMismatchError(SpectralError, ValueError):
    pass


class SingularSystemError(SpectralError, ArithmeticError):
    pass


class InsufficientSamplesError(SpectralError, ValueError):
    pass


class KindMismatchError(SpectralError, ValueError):
    pass


class ChecksumError(SpectralError, ValueError):
    pass


class ConfigError(SpectralError, ValueError):
    pass


class StageError(SpectralError):
    """A pipeline stage failed; carries the stage name for reporting."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} failed: {cause}")


class ToleranceExceededError(SpectralError):
    """Validation found an approximation error above the configured tolerance."""
