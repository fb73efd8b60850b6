"""Discrete-time simulation of engagement between people, robots and objects."""

__version__ = "0.1.0"

from .engine import EngineParams, StopPredicate, TickRecord, iter_run, run, step
from .model import Channel, Entity, Environment, Goal, GoalKind, Pose, RelationState, World
from .scenario import Scenario, load_scenario

__all__ = [
    "Channel",
    "EngineParams",
    "Entity",
    "Environment",
    "Goal",
    "GoalKind",
    "Pose",
    "RelationState",
    "Scenario",
    "StopPredicate",
    "TickRecord",
    "World",
    "__version__",
    "iter_run",
    "load_scenario",
    "run",
    "step",
]
