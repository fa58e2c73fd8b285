"""Exception vocabulary shared by every module."""


class GaugeFormError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ParseError(GaugeFormError):
    exit_code = 2


class DimensionMismatch(GaugeFormError, ValueError):
    pass


class InsufficientPrecision(GaugeFormError):
    """Raised when a series is too short; ``needed`` is the required window."""

    exit_code = 3

    def __init__(self, message, needed=None, have=None):
        super().__init__(message)
        self.needed = needed
        self.have = have


class FieldTooSmall(GaugeFormError):
    """Needed scalars leave K; ``suggestion`` names an enlargement if one fits the cap."""

    exit_code = 4

    def __init__(self, message, suggestion=None):
        super().__init__(message)
        self.suggestion = suggestion


class Undecidable(GaugeFormError):
    exit_code = 5


class NotNilpotent(GaugeFormError, ValueError):
    pass


class ZeroInput(GaugeFormError, ValueError):
    pass


class NotInvertible(GaugeFormError, ValueError):
    pass


class DivergentExponential(GaugeFormError, ValueError):
    pass


class NotACocycle(GaugeFormError, ValueError):
    pass


class NotRegular(GaugeFormError, ValueError):
    pass


class OracleOutOfRange(GaugeFormError, ValueError):
    pass
