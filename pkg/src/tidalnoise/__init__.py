"""Tidal current turbine noise simulator.

Couples a one-mass drivetrain with MPPT torque control to inflow-turbulence,
gearbox and generator noise models, then rates the received levels against
marine-species hearing thresholds.
"""

__version__ = "0.1.0"

from .flowdata import FlowSample, FlowSeries, load_flow_csv, synthesize_semidiurnal, window
from .turbine import ControlConfig, DrivetrainConfig, OperatingState, Plant, RotorConfig, simulate
from .acoustics import AcousticsConfig, TurbulenceNoiseParams, received_spl, source_levels
from .bioimpact import ExposureCriteria, SpeciesProfile, assess, load_species_csv
from .scenario import ScenarioConfig, SweepSpec, compare, run_scenario, sweep, tts_onset_speed
from .config import load_config

__all__ = [
    "FlowSample", "FlowSeries", "load_flow_csv", "synthesize_semidiurnal", "window",
    "ControlConfig", "DrivetrainConfig", "OperatingState", "Plant", "RotorConfig", "simulate",
    "AcousticsConfig", "TurbulenceNoiseParams", "received_spl", "source_levels",
    "ExposureCriteria", "SpeciesProfile", "assess", "load_species_csv",
    "ScenarioConfig", "SweepSpec", "compare", "run_scenario", "sweep", "tts_onset_speed",
    "load_config",
]
