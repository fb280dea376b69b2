"""Ego speed adjustment against the closest road user.

Only the ego changes speed; every other road user is assumed to keep its
current speed.  The ego slows down when it would arrive just before the
other agent at the crossing point of their heading lines, speeds up when it
would be just past it, and holds otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .agents import AgentState
from .geometry import dist, dot, heading_line_intersection

DECELERATE = "decelerate"
ACCELERATE = "accelerate"
HOLD = "hold"

MIN_OTHER_SPEED = 1e-6


@dataclass(frozen=True)
class SpeedModParams:
    z: float
    delta_v: float
    v_min: float = 0.0
    v_max: float = math.inf

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("safe-space radius z must be > 0")
        if not self.delta_v > 0:
            raise ValueError("delta_v must be > 0")
        if not (0.0 <= self.v_min < self.v_max):
            raise ValueError("need 0 <= v_min < v_max")


@dataclass(frozen=True)
class SpeedDecision:
    action: str
    new_speed: float
    diagnostics: Optional[dict] = None
    flag: Optional[str] = None


def closest_agent(ego: AgentState, others: Sequence[AgentState]) -> Optional[int]:
    """Index of the nearest other agent, lowest index on ties; ``None`` if there is none."""
    best, best_d = None, math.inf
    for k, o in enumerate(others):
        d = dist(ego.position, o.position)
        if d < best_d:
            best, best_d = k, d
    return best


def _clamp(v: float, p: SpeedModParams) -> float:
    return min(max(v, p.v_min), p.v_max)


def speed_update(ego: AgentState, other: Optional[AgentState], params: SpeedModParams) -> SpeedDecision:
    v_e = ego.speed
    if other is None:
        return SpeedDecision(HOLD, _clamp(v_e, params), flag="no_other_agent")

    p_c = heading_line_intersection(ego.position, ego.heading, other.position, other.heading)
    if p_c is None:
        return SpeedDecision(HOLD, _clamp(v_e, params), flag="parallel_headings")
    if other.speed < MIN_OTHER_SPEED:
        return SpeedDecision(HOLD, _clamp(v_e, params), flag="other_stationary")
    heading_n = (math.cos(other.heading), math.sin(other.heading))
    if dot(heading_n, (p_c.x - other.x, p_c.y - other.y)) <= 0.0:
        return SpeedDecision(HOLD, _clamp(v_e, params), flag="crossing_behind_other")

    t_n = dist(other.position, p_c) / other.speed
    w_e = (math.cos(ego.heading), math.sin(ego.heading))
    p_f = (v_e * t_n * w_e[0] + ego.x, v_e * t_n * w_e[1] + ego.y)
    w_c = (p_c.x - p_f[0], p_c.y - p_f[1])
    gap = dist(p_c, p_f)
    along = dot(w_e, w_c)
    diag = {"p_c": (p_c.x, p_c.y), "t_n": t_n, "p_f": p_f, "gap": gap, "dot": along}

    if gap < params.z and along >= 0.0:
        return SpeedDecision(DECELERATE, _clamp(v_e - params.delta_v, params), diag)
    if gap < params.z and along < 0.0:
        return SpeedDecision(ACCELERATE, _clamp(v_e + params.delta_v, params), diag)
    return SpeedDecision(HOLD, _clamp(v_e, params), diag)
