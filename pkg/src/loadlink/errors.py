"""Exception types shared across the toolkit."""


class LoadlinkError(Exception):
    """Base class for all toolkit-specific errors."""


class InsufficientDataError(LoadlinkError):
    """A trace, window, or counter delta is too short to produce a result."""


class ProcStatParseError(LoadlinkError, ValueError):
    """A processor-time stat file could not be parsed."""


class CounterWrapError(LoadlinkError):
    """Cumulative counters went backwards between two snapshots."""


class SensorAccessError(LoadlinkError):
    """A sensing source file could not be read."""

    def __init__(self, path, reason: str = ""):
        self.path = str(path)
        msg = f"cannot read sensing source {self.path}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class SchedulingError(LoadlinkError):
    """A run was requested for an instant that is not schedulable."""


class IdSpaceExhaustedError(LoadlinkError):
    """No free installation ID remains at the configured width."""


class ConfigError(LoadlinkError, ValueError):
    """A configuration file or value is invalid."""
