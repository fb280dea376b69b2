"""Distributed MPC baseline for two interacting vehicles.

Each agent minimizes a horizon cost made of quadratic reference tracking,
quadratic input effort and one inverse-squared-distance repulsion term
against the other agent's predicted trajectory.  The two problems are solved
alternately (Jacobi style, each against the other's latest controls) and the
control iterates are relaxed between rounds until consecutive solutions stop
changing.

Controls are ``(H, 2)`` arrays with columns ``[acceleration, steering]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import AgentState, BicycleParams
from .geometry import Point2, Polyline


@dataclass(frozen=True)
class DmpcWeights:
    q1: float | Sequence[float] = 1.0
    q2: float | Sequence[float] = 1.0
    p1: float = 0.1
    p2: float = 1.0
    k: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        if np.any(np.asarray(self.q1) < 0) or np.any(np.asarray(self.q2) < 0):
            raise ValueError("tracking weights must be >= 0")
        if min(self.p1, self.p2, self.k) < 0:
            raise ValueError("input and repulsion weights must be >= 0")
        if not self.r > 0:
            raise ValueError("repulsion softening r must be > 0")


@dataclass(frozen=True)
class DmpcConfig:
    horizon: int = 10
    epsilon: float = 1e-3
    tau: float = 1e-3
    alpha: float = 0.5
    q_max: int = 50
    step_size: float = 0.05
    inner_iters: int = 200
    fd_step: float = 1e-6
    grad_tol: float = 1e-5

    def __post_init__(self):
        if self.horizon < 1 or self.q_max < 1 or self.inner_iters < 1:
            raise ValueError("horizon, q_max and inner_iters must be >= 1")
        if not (self.epsilon > 0 and self.tau > 0):
            raise ValueError("convergence thresholds must be > 0")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if not (self.fd_step > 0 and self.step_size > 0):
            raise ValueError("fd_step and step_size must be > 0")


@dataclass
class OcpResult:
    controls: np.ndarray
    objective: float
    iterations: int
    flag: Optional[str] = None


@dataclass
class DmpcResult:
    controls_e: np.ndarray
    controls_h: np.ndarray
    iterations: int
    converged: bool
    norms: tuple[float, float, float, float]
    traj_e: np.ndarray = field(repr=False)
    traj_h: np.ndarray = field(repr=False)
    flags: list = field(default_factory=list)


def zero_controls(horizon: int) -> np.ndarray:
    return np.zeros((horizon, 2))


def project_controls(u: np.ndarray, params: BicycleParams) -> np.ndarray:
    out = np.array(u, dtype=float, copy=True)
    out[..., 0] = np.clip(out[..., 0], -params.a_max, params.a_max)
    out[..., 1] = np.clip(out[..., 1], -params.delta_max, params.delta_max)
    return out


def rollout_batch(initial: AgentState, controls: np.ndarray, params: BicycleParams) -> np.ndarray:
    """States after each step for a batch of control sequences.

    ``controls`` is ``(B, H, 2)``; the result is ``(B, H, 4)`` with columns
    ``x, y, heading, speed``.
    """
    controls = np.asarray(controls, dtype=float)
    B, H, _ = controls.shape
    dt = params.dt
    # slip angle depends only on steering, so do it for the whole batch at once
    beta = np.arctan(params.l_r / (params.l_r + params.l_f) * np.tan(controls[:, :, 1]))
    turn = np.sin(beta) * (dt / params.l_r)
    dv = controls[:, :, 0] * dt
    x = np.full(B, float(initial.x))
    y = np.full(B, float(initial.y))
    phi = np.full(B, float(initial.heading))
    v = np.full(B, float(initial.speed))
    out = np.empty((B, H, 4))
    for k in range(H):
        ang = phi + beta[:, k]
        step = v * dt
        x = x + np.cos(ang) * step
        y = y + np.sin(ang) * step
        phi = phi + v * turn[:, k]
        v = np.maximum(v + dv[:, k], 0.0)
        out[:, k, 0] = x
        out[:, k, 1] = y
        out[:, k, 2] = phi
        out[:, k, 3] = v
    return out


def rollout(initial: AgentState, controls: np.ndarray, params: BicycleParams) -> list[AgentState]:
    arr = rollout_batch(initial, np.asarray(controls)[None], params)[0]
    return [AgentState(Point2(r[0], r[1]), r[2], r[3]) for r in arr]


def _objective_batch(xy, controls, reference, other_xy, weights: DmpcWeights, obstacles=()):
    """Vectorized horizon cost; ``xy`` is ``(B, H, 2)``, ``controls`` ``(B, H, 2)``."""
    H = xy.shape[1]
    q1 = np.broadcast_to(np.asarray(weights.q1, dtype=float), (H,))
    q2 = np.broadcast_to(np.asarray(weights.q2, dtype=float), (H,))
    ex = reference[None, :, 0] - xy[:, :, 0]
    ey = reference[None, :, 1] - xy[:, :, 1]
    j = (ex**2 * q1).sum(axis=1) + (ey**2 * q2).sum(axis=1)
    j = j + weights.p1 * (controls[:, :, 0] ** 2).sum(axis=1) + weights.p2 * (controls[:, :, 1] ** 2).sum(axis=1)
    if weights.k:
        for other in ([other_xy] if other_xy is not None else []) + list(obstacles):
            sep = ((xy - other[None]) ** 2).sum(axis=(1, 2))
            j = j + weights.k / (sep + weights.r)
    return 0.5 * j


def dmpc_objective(own_xy, other_xy, controls, reference, weights: DmpcWeights, obstacles=()) -> float:
    """Horizon cost of one agent.

    ``own_xy``, ``other_xy`` and ``reference`` are ``(H, 2)`` positions for
    steps ``1..H``; ``other_xy`` may be ``None`` for an agent without a
    counterpart.  The repulsion is a single term over the whole horizon.
    """
    own_xy = np.asarray(own_xy, dtype=float)
    val = _objective_batch(
        own_xy[None],
        np.asarray(controls, dtype=float)[None],
        np.asarray(reference, dtype=float),
        None if other_xy is None else np.asarray(other_xy, dtype=float),
        weights,
        [np.asarray(o, dtype=float) for o in obstacles],
    )
    return float(val[0])


_LADDER = 0.5 ** np.arange(8)


class _Problem:
    """One agent's optimal-control problem with the other agent's trajectory frozen."""

    def __init__(self, initial, other_xy, reference, weights, params, obstacles=()):
        self.initial = initial
        self.other_xy = None if other_xy is None else np.asarray(other_xy, dtype=float)
        self.reference = np.asarray(reference, dtype=float)
        self.weights = weights
        self.params = params
        self.obstacles = [np.asarray(o, dtype=float) for o in obstacles]

    def values(self, batch: np.ndarray) -> np.ndarray:
        states = rollout_batch(self.initial, batch, self.params)
        return _objective_batch(states[:, :, :2], batch, self.reference, self.other_xy, self.weights, self.obstacles)

    def value(self, u: np.ndarray) -> float:
        return float(self.values(u[None])[0])

    def gradient(self, u: np.ndarray, h: float) -> np.ndarray:
        n = u.size
        eye = np.eye(n).reshape(n, *u.shape) * h
        batch = np.concatenate([u[None] + eye, u[None] - eye])
        f = self.values(batch)
        return ((f[:n] - f[n:]) / (2.0 * h)).reshape(u.shape)


def fd_gradient(initial, controls, other_xy, reference, weights, params, h=1e-6, obstacles=()) -> np.ndarray:
    """Central finite-difference gradient of the horizon cost w.r.t. the controls."""
    prob = _Problem(initial, other_xy, reference, weights, params, obstacles)
    return prob.gradient(np.asarray(controls, dtype=float), h)


def agent_ocp_solve(
    initial: AgentState,
    other_xy: Optional[np.ndarray],
    warm: np.ndarray,
    reference: np.ndarray,
    weights: DmpcWeights,
    params: BicycleParams,
    config: DmpcConfig,
    obstacles=(),
) -> OcpResult:
    """Projected gradient descent with Barzilai-Borwein steps and Armijo backtracking."""
    prob = _Problem(initial, other_xy, reference, weights, params, obstacles)
    u = project_controls(warm, params)
    f = prob.value(u)
    if not math.isfinite(f):
        return OcpResult(u, f, 0, "nonfinite_warm_start")
    g = prob.gradient(u, config.fd_step)
    step = config.step_size
    flag = None
    it = 0
    for it in range(1, config.inner_iters + 1):
        pg = u - project_controls(u - g, params)
        if np.linalg.norm(pg) < config.grad_tol:
            it -= 1
            flag = "stationary"
            break
        # backtracking ladder evaluated in batches; the first accepted rung
        # is the one a sequential search would stop at
        t = step
        accepted = False
        while t > 1e-14 and not accepted:
            ts = t * _LADDER[_LADDER * t > 1e-14]
            cands = project_controls(u[None] - ts[:, None, None] * g[None], params)
            fcs = prob.values(cands)
            decrease = 1e-4 * np.sum(g[None] * (cands - u[None]), axis=(1, 2))
            ok = np.isfinite(fcs) & (fcs <= f + decrease)
            hit = int(np.argmax(ok)) if ok.any() else len(ts)
            if not np.all(np.isfinite(fcs[:hit])):
                flag = "nonfinite_objective"
            if hit < len(ts):
                accepted = True
                cand, fc = cands[hit], float(fcs[hit])
            t = ts[-1] * 0.5
        if not accepted:
            flag = flag or "line_search_failed"
            break
        gc = prob.gradient(cand, config.fd_step)
        s = (cand - u).ravel()
        y = (gc - g).ravel()
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 1e-16 else config.step_size
        step = min(max(step, 1e-8), 1e4)
        u, f, g = cand, fc, gc
        flag = None
    return OcpResult(u, f, it, flag)


def blend(new: np.ndarray, old: np.ndarray, alpha: float) -> np.ndarray:
    """Relaxed update ``alpha * new + (1 - alpha) * old``."""
    return alpha * np.asarray(new) + (1.0 - alpha) * np.asarray(old)


def shift_warm_start(u: np.ndarray) -> np.ndarray:
    """Drop the first input and repeat the last one."""
    u = np.asarray(u)
    return np.concatenate([u[1:], u[-1:]], axis=0)


def positions(initial: AgentState, controls: np.ndarray, params: BicycleParams) -> np.ndarray:
    return rollout_batch(initial, np.asarray(controls)[None], params)[0, :, :2]


def dmpc_iterate(
    state_e: AgentState,
    state_h: AgentState,
    ref_e: np.ndarray,
    ref_h: np.ndarray,
    weights_e: DmpcWeights,
    weights_h: DmpcWeights,
    params_e: BicycleParams,
    params_h: BicycleParams,
    config: DmpcConfig,
    warm_e: Optional[np.ndarray] = None,
    warm_h: Optional[np.ndarray] = None,
    obstacles_e=(),
    obstacles_h=(),
) -> DmpcResult:
    H = config.horizon
    ue_bar = project_controls(zero_controls(H) if warm_e is None else warm_e, params_e)
    uh_bar = project_controls(zero_controls(H) if warm_h is None else warm_h, params_h)
    ue_prev, uh_prev = ue_bar, uh_bar
    flags = []
    norms = (math.inf,) * 4
    ue, uh = ue_bar, uh_bar
    q = 0
    converged = False
    for q in range(1, config.q_max + 1):
        xy_e = positions(state_e, ue_bar, params_e)
        xy_h = positions(state_h, uh_bar, params_h)
        res_e = agent_ocp_solve(state_e, xy_h, ue_bar, ref_e, weights_e, params_e, config, obstacles_e)
        res_h = agent_ocp_solve(state_h, xy_e, uh_bar, ref_h, weights_h, params_h, config, obstacles_h)
        flags.extend(f for f in (res_e.flag, res_h.flag) if f and f != "stationary")
        ue, uh = res_e.controls, res_h.controls
        norms = (
            float(np.linalg.norm(ue[:, 0] - ue_prev[:, 0])),
            float(np.linalg.norm(ue[:, 1] - ue_prev[:, 1])),
            float(np.linalg.norm(uh[:, 0] - uh_prev[:, 0])),
            float(np.linalg.norm(uh[:, 1] - uh_prev[:, 1])),
        )
        if (
            norms[0] <= config.epsilon
            and norms[1] <= config.tau
            and norms[2] <= config.epsilon
            and norms[3] <= config.tau
        ):
            converged = True
            break
        ue_prev, uh_prev = ue, uh
        ue_bar = blend(ue, ue_bar, config.alpha)
        uh_bar = blend(uh, uh_bar, config.alpha)
    return DmpcResult(
        ue,
        uh,
        q,
        converged,
        norms,
        positions(state_e, ue, params_e),
        positions(state_h, uh, params_h),
        flags,
    )


def reference_points(path: Optional[Polyline], state: AgentState, speed: float, horizon: int, dt: float) -> np.ndarray:
    """Per-step reference positions marching along the path at ``speed``.

    Without a path the agent's straight constant-speed extrapolation is used.
    """
    if path is None:
        return constant_velocity(state, horizon, dt, speed)
    _, s0 = path.project(state.position)
    pts = [path.point_at(s0 + speed * dt * k) for k in range(1, horizon + 1)]
    return np.array([[p.x, p.y] for p in pts])


def constant_velocity(state: AgentState, horizon: int, dt: float, speed: Optional[float] = None) -> np.ndarray:
    v = state.speed if speed is None else speed
    k = np.arange(1, horizon + 1)[:, None]
    return np.array([state.x, state.y]) + v * dt * k * np.array([math.cos(state.heading), math.sin(state.heading)])
