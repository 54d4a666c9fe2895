"""Full-field beam displacement from accelerometers and strain gauges.

A B-spline expansion of the deflection shape turns the beam into a small
linear state-space model; a Kalman filter tracks the spline coefficients
from acceleration (process input) and strain (measurement).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DataError,
    NumericalError,
    RankDeficiencyError,
    SingularInnovationError,
    SplineFusionError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "NumericalError",
    "RankDeficiencyError",
    "SingularInnovationError",
    "SplineFusionError",
]
