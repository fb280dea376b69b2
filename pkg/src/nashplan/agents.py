"""Road-user state, scenario-level agent description and the two motion models.

The search planner moves agents with fixed-length displacement vectors fanned
around the current heading; the optimization baseline and the tracking loop
use a forward-Euler kinematic bicycle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import Point2, Polyline, as_point, wrap_angle


class Role(str, Enum):
    EGO = "ego"
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"


@dataclass(frozen=True)
class AgentState:
    position: Point2
    heading: float
    speed: float

    def __post_init__(self):
        object.__setattr__(self, "position", as_point(self.position))
        if not (math.isfinite(self.heading) and math.isfinite(self.speed)):
            raise ValueError("heading and speed must be finite")
        if self.speed < 0.0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))
        object.__setattr__(self, "speed", float(self.speed))

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y

    def with_(self, **changes) -> "AgentState":
        return replace(self, **changes)


@dataclass(frozen=True)
class AgentSpec:
    id: str
    role: Role
    initial_state: AgentState
    reference_path: Optional[Polyline] = None
    goal: Optional[Point2] = None
    branch_count: int = 5
    desired_speed: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.goal is not None:
            object.__setattr__(self, "goal", as_point(self.goal))
        if int(self.branch_count) != self.branch_count or self.branch_count < 1:
            raise ValueError(f"branch_count must be a positive integer, got {self.branch_count}")

    def validate(self) -> list[str]:
        """Non-fatal findings about this agent."""
        notes = []
        if self.branch_count % 2 == 0:
            notes.append(f"agent {self.id}: even branch_count {self.branch_count} gives an asymmetric heading fan")
        if self.reference_path is None and self.goal is None:
            notes.append(f"agent {self.id}: no reference_path or goal, only the distance cost drives it")
        return notes


@dataclass(frozen=True)
class SearchParams:
    k_v: float
    delta_theta: float
    depth: int = 1

    def __post_init__(self):
        if not self.k_v > 0:
            raise ValueError("k_v must be > 0")
        if not self.delta_theta > 0:
            raise ValueError("delta_theta must be > 0")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError("depth must be a positive integer")


@dataclass(frozen=True)
class BicycleParams:
    l_f: float = 1.4
    l_r: float = 1.4
    dt: float = 0.1
    a_max: float = 4.0
    delta_max: float = 0.6

    def __post_init__(self):
        if min(self.l_f, self.l_r, self.dt) <= 0:
            raise ValueError("l_f, l_r and dt must be > 0")
        if self.a_max <= 0 or self.delta_max <= 0:
            raise ValueError("input bounds must be > 0")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r


@dataclass(frozen=True)
class BicycleInput:
    accel: float
    steer: float


def displacement_length(state: AgentState, params: SearchParams) -> float:
    return params.k_v * state.speed


def candidate_headings(state: AgentState, s: int, delta_theta: float) -> list[float]:
    """Heading fan; index 0 keeps the heading, then +1, -1, +2, -2 ... increments."""
    if s < 1:
        raise ValueError("branch count must be >= 1")
    phi = state.heading
    out = []
    for b in range(1, s + 1):
        if b == 1:
            h = phi
        elif b % 2 == 0:
            h = phi + (b / 2) * delta_theta
        else:
            h = phi - ((b - 1) / 2) * delta_theta
        out.append(wrap_angle(h))
    return out


def candidate_positions(state: AgentState, params: SearchParams, s: int) -> list[Point2]:
    step = displacement_length(state, params)
    px, py = state.position.x, state.position.y
    return [
        Point2(px + step * math.cos(h), py + step * math.sin(h))
        for h in candidate_headings(state, s, params.delta_theta)
    ]


def bicycle_derivatives(x, y, phi, v, a, delta, params: BicycleParams):
    beta = np.arctan(params.l_r / (params.l_r + params.l_f) * np.tan(delta))
    return (
        v * np.cos(phi + beta),
        v * np.sin(phi + beta),
        v / params.l_r * np.sin(beta),
        a,
    )


def bicycle_step_arrays(x, y, phi, v, a, delta, params: BicycleParams, dt: Optional[float] = None):
    """Vectorized Euler step; works on scalars or same-shape numpy arrays."""
    dt = params.dt if dt is None else dt
    dx, dy, dphi, dv = bicycle_derivatives(x, y, phi, v, a, delta, params)
    return x + dx * dt, y + dy * dt, phi + dphi * dt, np.maximum(v + dv * dt, 0.0)


def bicycle_step(state: AgentState, u: BicycleInput, params: BicycleParams) -> AgentState:
    if not (math.isfinite(u.accel) and math.isfinite(u.steer)):
        raise ValueError("non-finite bicycle input")
    if abs(u.accel) > params.a_max + 1e-12 or abs(u.steer) > params.delta_max + 1e-12:
        raise ValueError(f"input {u} outside bounds a_max={params.a_max}, delta_max={params.delta_max}")
    beta = math.atan(params.l_r / (params.l_r + params.l_f) * math.tan(u.steer))
    v = state.speed
    phi = state.heading
    dt = params.dt
    x = state.x + v * math.cos(phi + beta) * dt
    y = state.y + v * math.sin(phi + beta) * dt
    phi = phi + v / params.l_r * math.sin(beta) * dt
    v = max(v + u.accel * dt, 0.0)
    return AgentState(Point2(x, y), phi, v)


def clip_input(accel: float, steer: float, params: BicycleParams) -> BicycleInput:
    return BicycleInput(
        min(max(accel, -params.a_max), params.a_max),
        min(max(steer, -params.delta_max), params.delta_max),
    )


def warn_on_specs(specs) -> list[str]:
    notes = []
    for sp in specs:
        notes.extend(sp.validate())
    for n in notes:
        if "even branch_count" in n:
            warnings.warn(n, stacklevel=2)
    return notes
