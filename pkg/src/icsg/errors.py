"""Exception types shared across the package."""


class IcsgError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(IcsgError):
    """A model failed validation or a structural precondition."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InfeasibleRowError(IcsgError):
    """An interval row has sum(lo) > 1 or sum(hi) < 1."""


class PivotingError(IcsgError):
    """The simplex pivot loop hit its iteration guard."""


class CapExceededError(IcsgError):
    """An enumeration bound (vertices, game size, resolutions) was exceeded."""


class PropertyError(IcsgError):
    """A property string could not be parsed or is unsupported."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class AssumptionError(IcsgError):
    """The model violates a structural assumption required by a solver."""
