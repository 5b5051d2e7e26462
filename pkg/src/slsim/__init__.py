"""Slot-level NR sidelink simulator for platooning resource allocation studies."""

from .engine import SimConfig, Simulation, run, sweep
from .errors import ConfigError, SimulationError, SlsimError
from .metrics import RunResult, aggregate, pir, prr
from .scenario import Scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunResult",
    "Scenario",
    "SimConfig",
    "Simulation",
    "SimulationError",
    "SlsimError",
    "aggregate",
    "pir",
    "prr",
    "run",
    "sweep",
]
