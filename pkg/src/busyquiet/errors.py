"""Exception hierarchy for the busyquiet package.

Everything raised intentionally by the library derives from BusyQuietError,
so callers (and the CLI) can distinguish validation problems from bugs.
Plain OSError is allowed to propagate from file I/O.
"""


class BusyQuietError(Exception):
    """Base class for all busyquiet errors."""


class DimensionError(BusyQuietError):
    """Shape or size of an input does not match what the operation requires."""


class ValidationError(BusyQuietError):
    """Input data violates a value-level invariant (e.g. NaN/Inf samples)."""


class ConfigError(BusyQuietError):
    """A parameter or configuration value is outside the supported set."""


class NormalizationError(BusyQuietError):
    """Kernel normalization is numerically impossible (divisor too close to 0)."""


class StateError(BusyQuietError):
    """An operation was called in the wrong order (e.g. backward without forward)."""


class NumericError(BusyQuietError):
    """A numeric procedure diverged or produced non-finite values."""


class FormatError(BusyQuietError):
    """A serialized artifact (raw clip file, config file) is malformed."""


class IngestionError(BusyQuietError):
    """A frame sequence could not be assembled into a clip."""
