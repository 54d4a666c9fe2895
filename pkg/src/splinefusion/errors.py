"""Exception hierarchy. Each family maps to one CLI exit code."""


class SplineFusionError(Exception):
    exit_code = 1


class ConfigError(SplineFusionError, ValueError):
    """Invalid or unparsable scenario configuration."""

    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DataError(SplineFusionError, ValueError):
    """Malformed, misaligned or out-of-range input data."""

    exit_code = 3


class NumericalError(SplineFusionError, ArithmeticError):
    exit_code = 4


class RankDeficiencyError(NumericalError):
    """Measurement rows do not determine all spline coefficients."""


class SingularInnovationError(NumericalError):
    """Innovation covariance too ill-conditioned to factorize safely."""
