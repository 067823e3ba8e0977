"""Classical and state/input-constrained model reference adaptive control."""

from cmrac.scenario import Scenario, load_scenario
from cmrac.simulation import SimConfig, SimResult, simulate

__all__ = ["Scenario", "SimConfig", "SimResult", "load_scenario", "simulate"]
__version__ = "0.1.0"
