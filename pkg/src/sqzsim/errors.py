"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat
and the categories coarse: bad values vs. bad configuration vs. not
enough data.
"""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A scenario, plan or run configuration is inconsistent or invalid."""


class InsufficientDataError(ConfigError):
    """A time series is too short for the requested spectral estimate."""


class CalibrationError(ValueError):
    """Calibration inputs are non-physical (wrong ordering or sign)."""


class GridMismatchError(ValueError):
    """Two spectra do not share the same frequency grid."""
