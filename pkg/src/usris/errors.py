"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration. ``key`` holds the dotted key path."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class FoldConstraintError(ValueError):
    """A fold angle outside the feasible discrete set."""


class InfeasibleBudgetError(ValueError):
    """Active-element budget does not fit the grid."""


class SingularityError(ValueError):
    """Coincident transmitter and receiver positions."""


class DegenerateChannelError(ArithmeticError):
    """Effective channel is identically zero so the requested direction is undefined."""
