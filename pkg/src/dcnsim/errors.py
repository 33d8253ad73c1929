"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimulationError):
    """Invalid configuration value (bad k, utilization out of range, ...)."""


class DomainError(SimulationError):
    """An operation was called outside its domain (negative load, unknown id, ...)."""


class CapacityError(SimulationError):
    """A switch exceeded its capacity.

    Carries the offending switch ids (and the timeslot, when known) so
    reports can name them.
    """

    def __init__(self, message, switches=(), timeslot=None):
        super().__init__(message)
        self.switches = tuple(switches)
        self.timeslot = timeslot


class InfeasibleError(SimulationError):
    """The requested placement or routing cannot be realized."""
