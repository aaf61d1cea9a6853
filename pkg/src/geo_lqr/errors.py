# Exceptions raised by geo_lqr.
#
# ConfigError subclasses map to CLI exit code 2, NumericalError subclasses to 3.


class GeoLqrError(Exception):
    """Base class for every error raised by the package."""

    exit_code: int = 1

    @property
    def reason(self) -> str:
        """Machine-readable reason, the class name."""
        return type(self).__name__


class ConfigError(GeoLqrError):
    exit_code = 2


class ParseError(ConfigError):
    """The scenario text is not a JSON object."""


class ValidationError(ConfigError):
    """A config value violates its type invariants."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class NumericalError(GeoLqrError):
    exit_code = 3


class AngleNearPi(NumericalError):
    """Logarithm requested at or near the cut locus (rotation angle ~ pi)."""


class NotControllable(NumericalError):
    pass


class NoStabilizingSolution(NumericalError):
    pass


class StepTooLarge(NumericalError):
    """Finite escape of the differential Riccati equation."""


class NumericalDivergence(NumericalError):
    pass


class ObstacleContact(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NoDescent(NumericalError):
    pass
