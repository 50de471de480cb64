"""Exception types shared across the toolkit."""


class PtychoError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(PtychoError):
    """Array shape or size violates an operation's contract."""


class GeometryError(PtychoError):
    """Camera-array layout does not fit the requested Fourier plane."""


class FormatError(PtychoError):
    """A binary or text artifact is malformed."""


class ConfigError(PtychoError):
    """Invalid or inconsistent run configuration."""


class NumericsError(PtychoError):
    """A numerical procedure produced non-finite or unusable values."""
