"""Exception types shared across the package."""


class DimensionLimitError(Exception):
    """An operation would materialize a Hilbert space above the configured maximum."""


class LayoutError(ValueError):
    """Unknown subsystem name, or operators living on incompatible layouts."""


class ConfigError(ValueError):
    """Malformed or out-of-range sweep configuration."""


class TheoremViolationError(RuntimeError):
    """A quantity that is guaranteed by an exact identity or bound came out wrong.

    These are raised, never silently tolerated: a violation beyond tolerance
    means a numerical or programming bug, not physics.
    """

    def __init__(self, name: str, value: float, message: str = ""):
        self.name = name
        self.value = value
        super().__init__(f"{name} violated (value {value:.3e}){': ' + message if message else ''}")
