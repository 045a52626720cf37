"""Trust-based detection of misbehaving roadside units in a simulated vehicular network."""

from .config import ScenarioConfig, parse_config, emit_config, preset
from .simulation import RunResult, Simulation, run

__all__ = ["ScenarioConfig", "parse_config", "emit_config", "preset", "RunResult", "Simulation", "run"]
__version__ = "0.1.0"
