"""Wi-Fi / LTE-U coexistence simulator."""

from .channel import PathLossParams, path_loss_db, sample_energy, window_energy_dbm
from .config import ApSpec, ChangePoint, ConfigError, LteuSpec, ScenarioConfig, dump_scenario, load_scenario
from .mac import DcfStationState, InvalidStageError, draw_backoff
from .simulator import CoexistenceSimulator, SimTrace, simulate_scenario

__all__ = [
    "ApSpec", "ChangePoint", "CoexistenceSimulator", "ConfigError", "DcfStationState",
    "InvalidStageError", "LteuSpec", "PathLossParams", "ScenarioConfig", "SimTrace",
    "draw_backoff", "dump_scenario", "load_scenario", "path_loss_db", "sample_energy",
    "simulate_scenario", "window_energy_dbm",
]
