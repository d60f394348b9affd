"""Induction motor IFOC drive simulation with online MRAS rotor-resistance adaptation."""

from imdrive.motor import MotorParams, MotorState
from imdrive.scenario import ScenarioConfig, RunSummary, builtin_scenarios, run

__all__ = [
    "MotorParams",
    "MotorState",
    "ScenarioConfig",
    "RunSummary",
    "builtin_scenarios",
    "run",
]

__version__ = "0.1.0"
