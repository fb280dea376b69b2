"""Per-agent objective terms for the discrete game.

Every agent's strategy is a path of positions ``(current, step_1, ..., step_d)``.
For the single-step game ``d == 1``.  Terms of a multi-step path are summed
over its steps, each step using the previous node as its "current" position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import PointLike, Polyline, dist

COLLISION_EPS = 1e-9
COLLISION = math.inf


@dataclass(frozen=True)
class CostWeights:
    lane: float = 1.0
    dist: float = 1.0
    goal: float = 1.0

    def __post_init__(self):
        if min(self.lane, self.dist, self.goal) < 0:
            raise ValueError("cost weights must be >= 0")


@dataclass(frozen=True)
class CostBreakdown:
    c_lane: float
    c_dist: float
    c_goal: float
    total: float


class CandidateSet:
    """Candidate node paths for every agent.

    ``paths[i]`` has shape ``(S_i, d + 1, 2)``; row ``[:, 0]`` repeats the
    agent's current position.
    """

    def __init__(self, paths: Sequence[np.ndarray]):
        self.paths = [np.asarray(p, dtype=float) for p in paths]
        for p in self.paths:
            if p.ndim != 3 or p.shape[0] < 1 or p.shape[2] != 2 or p.shape[1] < 2:
                raise ValueError(f"bad candidate path array shape {p.shape}")
        depths = {p.shape[1] for p in self.paths}
        if len(depths) != 1:
            raise ValueError("all agents need the same search depth")

    @classmethod
    def single_step(cls, current: Sequence[PointLike], candidates: Sequence[Sequence[PointLike]]):
        paths = []
        for cur, cands in zip(current, candidates):
            c = np.asarray([[p[0], p[1]] for p in cands], dtype=float)
            start = np.broadcast_to(np.asarray([cur[0], cur[1]], dtype=float), c.shape)
            paths.append(np.stack([start, c], axis=1))
        return cls(paths)

    @property
    def n_agents(self) -> int:
        return len(self.paths)

    @property
    def depth(self) -> int:
        return self.paths[0].shape[1] - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(p.shape[0] for p in self.paths)

    @property
    def current(self) -> np.ndarray:
        return np.array([p[0, 0] for p in self.paths])

    def candidates(self, i: int) -> np.ndarray:
        """First-step candidate positions of agent ``i``."""
        return self.paths[i][:, 1]


def cost_lane(current: PointLike, candidate: PointLike, path: Optional[Polyline]) -> float:
    if path is None:
        return 0.0
    cur_proj, _ = path.project(current)
    cand_proj, _ = path.project(candidate)
    return dist(current, cur_proj) * dist(candidate, cand_proj)


def cost_goal(current: PointLike, candidate: PointLike, goal: Optional[PointLike]) -> float:
    if goal is None:
        return 0.0
    return dist(current, goal) * dist(candidate, goal)


def _step_distance_cost(i, profile, candidates: CandidateSet, k: int) -> float:
    if candidates.n_agents == 1:
        return 0.0
    pi = candidates.paths[i][profile[i]]
    acc = 0.0
    for l in range(candidates.n_agents):
        if l == i:
            continue
        pl = candidates.paths[l][profile[l]]
        acc += dist(pi[k], pl[k]) * dist(pi[k + 1], pl[k + 1])
    if acc < COLLISION_EPS:
        return COLLISION
    return 1.0 / acc


def cost_distance(i: int, profile: Sequence[int], candidates: CandidateSet) -> float:
    """Inverse distance-product cost of agent ``i`` under a joint profile.

    Returns ``math.inf`` (the collision sentinel) when the distance sum
    vanishes.  Zero when agent ``i`` is alone.
    """
    total = 0.0
    for k in range(candidates.depth):
        total += _step_distance_cost(i, profile, candidates, k)
    return total


def total_cost(i: int, profile: Sequence[int], candidates: CandidateSet, specs, weights: Optional[CostWeights] = None) -> CostBreakdown:
    w = weights or CostWeights()
    path = candidates.paths[i][profile[i]]
    spec = specs[i]
    c_lane = sum(cost_lane(path[k], path[k + 1], spec.reference_path) for k in range(candidates.depth))
    c_goal = sum(cost_goal(path[k], path[k + 1], spec.goal) for k in range(candidates.depth))
    c_dist = cost_distance(i, profile, candidates)
    if math.isinf(c_dist):
        return CostBreakdown(c_lane, c_dist, c_goal, COLLISION)
    total = 0.0
    for weight, term in ((w.lane, c_lane), (w.dist, c_dist), (w.goal, c_goal)):
        if weight:
            total += weight * term
    return CostBreakdown(c_lane, c_dist, c_goal, total)
