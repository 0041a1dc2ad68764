"""Exception types shared across the package."""


class QuditLearnError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(QuditLearnError, ValueError):
    """Level index or vector dimension out of range / mismatched."""


class EncodingError(QuditLearnError, ValueError):
    """Feature vector incompatible with the encoding layout."""


class DataError(QuditLearnError, ValueError):
    """Dataset file malformed or split request impossible."""


class ConfigError(QuditLearnError, ValueError):
    """Experiment configuration missing or inconsistent."""


class NumericalError(QuditLearnError, RuntimeError):
    """Optimizer or integrator failed to produce a usable result."""
