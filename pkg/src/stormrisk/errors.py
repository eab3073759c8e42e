"""Exception and warning types shared across the package."""


class StormriskError(Exception):
    """Base class for errors raised by this package."""


class NonConvergence(StormriskError):
    """Optimiser hit its iteration cap without meeting the convergence tolerance."""


class DegenerateSample(StormriskError):
    """Sample has no variability, so a density estimate is undefined."""


class TooFewEvents(StormriskError):
    """Not enough events for the requested diagnostic."""


class BracketFailure(StormriskError):
    """Root bracketing exhausted the support without finding a sign change."""


class UnsupportedConditioningValue(StormriskError):
    """Conditioning level has zero density under every covariate/effect value."""


class PriorMismatch(StormriskError):
    """Prior support excludes the initial parameter values."""


class CsvFormatError(StormriskError):
    """Malformed CSV input; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class ChainStuck(UserWarning):
    """A sampler component accepted under 1% of proposals after burn-in.

    Emitted as a warning: the samples are still returned.
    """
