"""Game-theoretic multi-agent motion planning with a distributed MPC baseline."""

from .agents import AgentSpec, AgentState, BicycleParams, Role, SearchParams
from .geometry import Point2, Polyline
from .nash_planner import NashConfig, plan_horizon, plan_step
from .sim import Scenario, SimResult, randomized_trials, simulate

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "AgentState",
    "BicycleParams",
    "NashConfig",
    "Point2",
    "Polyline",
    "Role",
    "Scenario",
    "SearchParams",
    "SimResult",
    "plan_horizon",
    "plan_step",
    "randomized_trials",
    "simulate",
]
