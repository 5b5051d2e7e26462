"""Exception types shared across the simulator."""


class SlsimError(Exception):
    """Base class for simulator errors."""


class ConfigError(SlsimError):
    """Invalid configuration value or violated config invariant."""


class SimulationError(SlsimError):
    """Runtime failure while executing a simulation."""
