"""One planning tick of the discrete Nash planner, and open-loop rolling over ticks."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import AgentSpec, AgentState, SearchParams, candidate_headings, displacement_length
from .costs import CandidateSet, CostWeights
from .game import (
    DEFAULT_CELL_BUDGET,
    EquilibriumResult,
    PayoffTensor,
    build_payoff_tensor,
    check_budget,
    find_pure_nash,
    select_equilibrium,
)
from .geometry import Point2
from .speed import SpeedDecision, SpeedModParams, closest_agent, speed_update


@dataclass(frozen=True)
class NashConfig:
    search: SearchParams
    speed: SpeedModParams
    weights: CostWeights = CostWeights()
    horizon: int = 1
    cell_budget: int = DEFAULT_CELL_BUDGET


@dataclass
class PlanStep:
    ego: int
    ego_next: Point2
    ego_heading: float
    new_speed: float
    speed_decision: SpeedDecision
    predictions: dict[int, tuple[Point2, float]]
    equilibrium: EquilibriumResult
    tensor: PayoffTensor
    candidates: CandidateSet
    headings: list[np.ndarray]
    solve_time: float = 0.0

    def planned_path(self, i: int) -> np.ndarray:
        """Full node sequence of agent ``i`` under the chosen profile (current node first)."""
        return self.candidates.paths[i][self.equilibrium.profile[i]]


@dataclass
class PlanTrace:
    steps: list[PlanStep] = field(default_factory=list)
    states: list[list[AgentState]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.steps)

    def ego_path(self) -> np.ndarray:
        ego = self.steps[0].ego
        pts = [self.states[0][ego].position] + [s.ego_next for s in self.steps]
        return np.array([[p.x, p.y] for p in pts])

    @property
    def solve_time(self) -> float:
        return sum(s.solve_time for s in self.steps)


def multi_step_tree(state: AgentState, search: SearchParams, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Depth-``d`` fan expansion.

    Returns node paths ``(s**d, d + 1, 2)`` (current position first) and the
    heading used at every step ``(s**d, d)``.  Sequence index ``j`` encodes the
    branch choices in base ``s`` with the first step most significant.
    """
    d = search.depth
    check_budget((s,) * d, DEFAULT_CELL_BUDGET)
    step = displacement_length(state, search)
    paths = np.empty((s**d, d + 1, 2))
    heads = np.empty((s**d, d))
    paths[:, 0] = (state.x, state.y)
    frontier = [(state.x, state.y, state.heading)]
    for k in range(d):
        nxt = []
        for (x, y, phi) in frontier:
            fan = candidate_headings(AgentState(Point2(x, y), phi, state.speed), s, search.delta_theta)
            for h in fan:
                nxt.append((x + step * math.cos(h), y + step * math.sin(h), h))
        frontier = nxt
        reps = s ** (d - k - 1)
        arr = np.array(frontier)
        paths[:, k + 1] = np.repeat(arr[:, :2], reps, axis=0)
        heads[:, k] = np.repeat(arr[:, 2], reps)
    return paths, heads


def multi_step_candidates(state: AgentState, search: SearchParams, s: int) -> list[list[Point2]]:
    paths, _ = multi_step_tree(state, search, s)
    return [[Point2(float(p[0]), float(p[1])) for p in seq[1:]] for seq in paths]


def plan_step(
    states: Sequence[AgentState],
    specs: Sequence[AgentSpec],
    search: SearchParams,
    speed_params: SpeedModParams,
    ego: int = 0,
    weights: Optional[CostWeights] = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> PlanStep:
    t0 = time.perf_counter()
    check_budget([sp.branch_count ** search.depth for sp in specs], cell_budget)
    trees = [multi_step_tree(st, search, sp.branch_count) for st, sp in zip(states, specs)]
    candidates = CandidateSet([p for p, _ in trees])
    headings = [h for _, h in trees]
    tensor = build_payoff_tensor(candidates, specs, weights, cell_budget)
    eq = select_equilibrium(tensor, find_pure_nash(tensor), ego)

    others = [k for k in range(len(states)) if k != ego]
    near = closest_agent(states[ego], [states[k] for k in others])
    decision = speed_update(states[ego], None if near is None else states[others[near]], speed_params)

    def node(i):
        b = eq.profile[i]
        p = candidates.paths[i][b, 1]
        return Point2(float(p[0]), float(p[1])), float(headings[i][b, 0])

    ego_next, ego_heading = node(ego)
    preds = {k: node(k) for k in others}
    elapsed = time.perf_counter() - t0
    return PlanStep(ego, ego_next, ego_heading, decision.new_speed, decision, preds, eq, tensor, candidates, headings, elapsed)


def advance(states: Sequence[AgentState], step: PlanStep) -> list[AgentState]:
    """Move every agent onto its chosen first node; only the ego changes speed."""
    out = []
    for k, st in enumerate(states):
        if k == step.ego:
            out.append(AgentState(step.ego_next, step.ego_heading, step.new_speed))
        else:
            p, h = step.predictions[k]
            out.append(AgentState(p, h, st.speed))
    return out


def plan_horizon(
    states: Sequence[AgentState],
    specs: Sequence[AgentSpec],
    search: SearchParams,
    speed_params: SpeedModParams,
    ticks: int,
    ego: int = 0,
    weights: Optional[CostWeights] = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> PlanTrace:
    """Replan every tick while the others follow their predicted nodes at constant speed."""
    if ticks < 1:
        raise ValueError("ticks must be >= 1")
    trace = PlanTrace(metadata={"ticks": ticks, "ego": ego, "depth": search.depth})
    cur = list(states)
    for _ in range(ticks):
        step = plan_step(cur, specs, search, speed_params, ego, weights, cell_budget)
        trace.steps.append(step)
        trace.states.append(cur)
        cur = advance(cur, step)
    trace.states.append(cur)
    return trace
