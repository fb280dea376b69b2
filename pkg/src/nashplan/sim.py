"""Closed-loop scenario execution.

Each tick the selected planner produces an ego path; the ego follows it with
pure pursuit on a kinematic bicycle while every other road user plays its own
component of the tick's Nash profile with Gaussian heading noise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .agents import AgentSpec, AgentState, BicycleParams, Role, bicycle_step, clip_input
from .dmpc import (
    DmpcConfig,
    DmpcWeights,
    agent_ocp_solve,
    constant_velocity,
    dmpc_iterate,
    positions,
    reference_points,
    shift_warm_start,
    zero_controls,
)
from .game import FALLBACK_MIN_REGRET
from .geometry import Point2, Polyline, dist, wrap_angle
from .nash_planner import NashConfig, PlanStep, plan_horizon, plan_step

NASH = "nash"
DMPC = "dmpc"
PLANNERS = (NASH, DMPC)

DMPC_CONVERGED = "dmpc_converged"
DMPC_NOT_CONVERGED = "dmpc_not_converged"


@dataclass(frozen=True)
class DmpcSettings:
    weights_e: DmpcWeights = DmpcWeights()
    weights_h: DmpcWeights = DmpcWeights()
    config: DmpcConfig = DmpcConfig()
    dt: Optional[float] = None


@dataclass(frozen=True)
class Randomization:
    position: float = 0.0
    speed: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    agents: tuple[AgentSpec, ...]
    duration: float
    tick: float
    planner: str
    nash: NashConfig
    dmpc: DmpcSettings = DmpcSettings()
    bicycle: BicycleParams = BicycleParams()
    noise_std: float = 0.0
    seed: int = 0
    lookahead: float = 3.0
    collision_radius: dict = field(default_factory=lambda: {"ego": 1.0, "vehicle": 1.0, "pedestrian": 0.5})
    goal_tolerance: float = 0.5
    randomize: Randomization = Randomization()

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.duration > 0 or not self.tick > 0:
            raise ValueError("duration and tick must be > 0")
        egos = [a for a in self.agents if a.role == Role.EGO]
        if len(egos) != 1:
            raise ValueError(f"scenario needs exactly one ego, found {len(egos)}")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if len({a.id for a in self.agents}) != len(self.agents):
            raise ValueError("agent ids must be unique")

    @property
    def ego(self) -> int:
        return next(k for k, a in enumerate(self.agents) if a.role == Role.EGO)

    @property
    def n_ticks(self) -> int:
        return max(1, math.ceil(self.duration / self.tick - 1e-9))

    def radius(self, i: int) -> float:
        return float(self.collision_radius[self.agents[i].role.value])

    def pair_threshold(self, i: int, j: int) -> float:
        return max(self.radius(i), self.radius(j))


@dataclass
class SimResult:
    agent_ids: list[str]
    tick: float
    poses: np.ndarray
    planned: np.ndarray
    solver_time: np.ndarray
    kinds: list[str]
    min_distance: float
    collision: bool
    tracking: dict
    all_done: bool = False
    error: Optional[str] = None

    @property
    def ticks(self) -> int:
        return self.poses.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.ticks) * self.tick

    @property
    def total_solver_time(self) -> float:
        return float(sum(self.solver_time.tolist()))

    @property
    def fallback_ticks(self) -> int:
        return sum(k == FALLBACK_MIN_REGRET for k in self.kinds)

    @property
    def nonconverged_ticks(self) -> int:
        return sum(k == DMPC_NOT_CONVERGED for k in self.kinds)


def pure_pursuit_steer(state: AgentState, path: Polyline, lookahead: float, params: BicycleParams) -> tuple[float, bool]:
    """Steering toward the path point ``lookahead`` metres from the vehicle.

    The target is the first forward intersection of the lookahead circle with
    the path; if the circle misses the path the point ``lookahead`` ahead of
    the projection is used, and near the end of the path the end point.
    Returns ``(steer, done)``; ``done`` means the path is used up.
    """
    if not lookahead > 0:
        raise ValueError("lookahead must be > 0")
    _, s_proj = path.project(state.position)
    if path.length - s_proj < 1e-9:
        return 0.0, True
    s_t = path.circle_intersection_ahead(state.position, lookahead, s_proj)
    if s_t is None:
        s_t = min(s_proj + lookahead, path.length)
    target = path.point_at(s_t)
    eta = wrap_angle(math.atan2(target.y - state.y, target.x - state.x) - state.heading)
    steer = math.atan(2.0 * params.wheelbase * math.sin(eta) / lookahead)
    return min(max(steer, -params.delta_max), params.delta_max), False


def behavioral_step(state: AgentState, heading: float, tick: float, rng: Optional[np.random.Generator], noise_std: float) -> AgentState:
    """Advance a non-ego agent along its chosen branch heading plus heading noise.

    Speed is kept; with ``k_v == tick`` and no noise the agent lands exactly on
    its chosen candidate node.
    """
    noise = float(rng.normal(0.0, noise_std)) if (rng is not None and noise_std > 0) else 0.0
    h = wrap_angle(heading + noise)
    step = tick * state.speed
    return AgentState(Point2(state.x + step * math.cos(h), state.y + step * math.sin(h)), h, state.speed)


def _dedupe(points: np.ndarray) -> list:
    out = [points[0]]
    for p in points[1:]:
        if math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > 1e-9:
            out.append(p)
    return out


def _agent_done(spec: AgentSpec, state: AgentState, tol: float) -> bool:
    if spec.goal is not None and spec.reference_path is None:
        return dist(state.position, spec.goal) < tol
    if spec.reference_path is not None:
        _, s = spec.reference_path.project(state.position)
        return spec.reference_path.length - s < tol
    return False


def _dmpc_counterpart(states, specs, ego) -> Optional[int]:
    best, best_d = None, math.inf
    for k, (st, sp) in enumerate(zip(states, specs)):
        if k == ego or sp.role != Role.VEHICLE:
            continue
        d = dist(st.position, states[ego].position)
        if d < best_d:
            best, best_d = k, d
    return best


class _DmpcPlanner:
    """Receding-horizon wrapper keeping warm starts between ticks."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.warm: dict = {}

    def plan(self, states, specs, ego):
        sc = self.sc
        cfg = sc.dmpc.config
        H = cfg.horizon
        dt = sc.dmpc.dt if sc.dmpc.dt is not None else sc.tick
        params = replace(sc.bicycle, dt=dt)
        h = _dmpc_counterpart(states, specs, ego)

        def ref(i):
            sp = specs[i]
            v = sp.desired_speed if sp.desired_speed is not None else sp.initial_state.speed
            return reference_points(sp.reference_path, states[i], v, H, dt)

        obstacles = [constant_velocity(states[k], H, dt) for k in range(len(states)) if k not in (ego, h)]
        warm_e = self.warm.get(ego)
        if h is None:
            res = agent_ocp_solve(states[ego], None, zero_controls(H) if warm_e is None else warm_e, ref(ego), sc.dmpc.weights_e, params, cfg, obstacles)
            ue, converged = res.controls, res.flag is None or res.flag == "stationary"
            traj = positions(states[ego], ue, params)
        else:
            res = dmpc_iterate(
                states[ego], states[h], ref(ego), ref(h),
                sc.dmpc.weights_e, sc.dmpc.weights_h, params, params, cfg,
                warm_e, self.warm.get(("h", h)), obstacles_e=obstacles,
            )
            ue, converged, traj = res.controls_e, res.converged, res.traj_e
            self.warm[("h", h)] = shift_warm_start(res.controls_h)
        self.warm[ego] = shift_warm_start(ue)
        return ue, traj, converged


def _min_distance(poses: np.ndarray, scenario: Scenario) -> tuple[float, bool]:
    n = poses.shape[1]
    best = math.inf
    hit = False
    for i in range(n):
        for j in range(i + 1, n):
            d = np.hypot(poses[:, i, 0] - poses[:, j, 0], poses[:, i, 1] - poses[:, j, 1])
            m = float(d.min()) if d.size else math.inf
            best = min(best, m)
            if m < scenario.pair_threshold(i, j):
                hit = True
    return best, hit


def _tracking(poses: np.ndarray, specs: Sequence[AgentSpec]) -> dict:
    out = {}
    for i, sp in enumerate(specs):
        if sp.reference_path is None or poses.shape[0] == 0:
            continue
        err = np.array([abs(sp.reference_path.signed_offset(p[:2])) for p in poses[:, i]])
        out[sp.id] = {"mean": float(err.mean()), "rms": float(math.sqrt(float(np.mean(err**2)))), "max": float(err.max())}
    return out


def simulate(scenario: Scenario) -> SimResult:
    sc = scenario
    specs = list(sc.agents)
    n = len(specs)
    ego = sc.ego
    rng = np.random.default_rng(sc.seed)
    states = [sp.initial_state for sp in specs]
    params = replace(sc.bicycle, dt=sc.tick)
    cfg = sc.nash
    done = [False] * n
    dmpc = _DmpcPlanner(sc) if sc.planner == DMPC else None

    poses, planned, solver, kinds = [], [], [], []
    error = None
    for _ in range(sc.n_ticks):
        poses.append([[s.x, s.y, s.heading, s.speed] for s in states])
        try:
            if sc.planner == NASH:
                t0 = time.perf_counter()
                trace = plan_horizon(states, specs, cfg.search, cfg.speed, max(cfg.horizon, 1), ego, cfg.weights, cfg.cell_budget)
                elapsed = time.perf_counter() - t0
                world: PlanStep = trace.steps[0]
                ego_path = trace.ego_path()
                kind = world.equilibrium.kind
                accel = (world.new_speed - states[ego].speed) / sc.tick
            else:
                world = plan_step(states, specs, cfg.search, cfg.speed, ego, cfg.weights, cfg.cell_budget)
                t0 = time.perf_counter()
                ue, traj, converged = dmpc.plan(states, specs, ego)
                elapsed = time.perf_counter() - t0
                ego_path = np.vstack([[states[ego].x, states[ego].y], traj])
                kind = DMPC_CONVERGED if converged else DMPC_NOT_CONVERGED
                accel = float(ue[0, 0])
        except Exception as exc:  # noqa: BLE001 - recorded in the result
            error = f"{type(exc).__name__}: {exc}"
            poses.pop()
            break

        row = []
        for i in range(n):
            if i == ego:
                row.append([float(ego_path[1][0]), float(ego_path[1][1])])
            else:
                p, _ = world.predictions[i]
                row.append([p.x, p.y])
        planned.append(row)
        solver.append(elapsed)
        kinds.append(kind)

        nxt = list(states)
        for i in range(n):
            st = states[i]
            if done[i]:
                continue
            if i == ego:
                pts = _dedupe(np.asarray(ego_path))
                steer, _ = (0.0, True) if len(pts) < 2 else pure_pursuit_steer(st, Polyline(pts), sc.lookahead, params)
                nxt[i] = bicycle_step(st, clip_input(accel, steer, params), params)
            else:
                _, heading = world.predictions[i]
                nxt[i] = behavioral_step(st, heading, sc.tick, rng, sc.noise_std)
            if _agent_done(specs[i], nxt[i], sc.goal_tolerance):
                done[i] = True
                nxt[i] = nxt[i].with_(speed=0.0)
        states = nxt
        if all(done):
            break

    pose_arr = np.array(poses, dtype=float).reshape(-1, n, 4)
    min_d, hit = _min_distance(pose_arr, sc)
    return SimResult(
        agent_ids=[sp.id for sp in specs],
        tick=sc.tick,
        poses=pose_arr,
        planned=np.array(planned, dtype=float).reshape(-1, n, 2),
        solver_time=np.array(solver, dtype=float),
        kinds=kinds,
        min_distance=min_d,
        collision=hit,
        tracking=_tracking(pose_arr, specs),
        all_done=all(done),
        error=error,
    )


def perturb(scenario: Scenario, rng: np.random.Generator) -> Scenario:
    pr, vr = scenario.randomize.position, scenario.randomize.speed
    agents = []
    for sp in scenario.agents:
        st = sp.initial_state
        dx, dy = rng.uniform(-pr, pr, 2) if pr > 0 else (0.0, 0.0)
        dv = rng.uniform(-vr, vr) if vr > 0 else 0.0
        new = AgentState(Point2(st.x + dx, st.y + dy), st.heading, max(st.speed + dv, 0.0))
        agents.append(replace(sp, initial_state=new))
    return replace(scenario, agents=tuple(agents))


@dataclass
class TrialSummary:
    planner: str
    results: list
    errors: list

    @property
    def scenario_times(self) -> list[float]:
        return [r.total_solver_time for r in self.results]

    @property
    def tick_times(self) -> list[float]:
        return [t for r in self.results for t in r.solver_time.tolist()]

    @property
    def collisions(self) -> int:
        return sum(r.collision for r in self.results)

    @property
    def divergences(self) -> int:
        return sum(r.fallback_ticks + r.nonconverged_ticks for r in self.results)


def randomized_trials(scenario: Scenario, trials: int, seed: Optional[int] = None, planner: Optional[str] = None) -> TrialSummary:
    """Run ``trials`` perturbed copies of a scenario.

    Every trial gets its own child seed of the master seed, used both for the
    initial-condition perturbation and for that trial's noise stream.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    base = scenario if planner is None else replace(scenario, planner=planner)
    master = np.random.SeedSequence(scenario.seed if seed is None else seed)
    results, errors = [], []
    for k, child in enumerate(master.spawn(trials)):
        rng = np.random.default_rng(child)
        trial = perturb(base, rng)
        trial = replace(trial, seed=int(rng.integers(2**31 - 1)))
        try:
            res = simulate(trial)
        except Exception as exc:  # noqa: BLE001 - per-trial failures are reported, not fatal
            errors.append((k, f"{type(exc).__name__}: {exc}"))
            continue
        if res.error:
            errors.append((k, res.error))
        results.append(res)
    return TrialSummary(base.planner, results, errors)
