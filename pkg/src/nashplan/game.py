"""Finite N-player game over candidate sets and pure Nash identification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .costs import COLLISION, COLLISION_EPS, CandidateSet, CostWeights

DEFAULT_CELL_BUDGET = 10**7

PURE_NASH = "pure_nash"
FALLBACK_MIN_REGRET = "fallback_min_regret"


class TensorBudgetError(ValueError):
    """Raised when a joint strategy space exceeds the configured cell budget."""


@dataclass
class PayoffTensor:
    """``costs[i]`` holds player ``i``'s cost over all joint profiles."""

    costs: np.ndarray

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float)
        if self.costs.ndim < 2 or self.costs.ndim != self.costs.shape[0] + 1:
            raise ValueError(f"payoff array of shape {self.costs.shape} is not (N, s_1, ..., s_N)")
        if np.any(np.isnan(self.costs)) or np.any(self.costs == -math.inf):
            raise ValueError("payoffs must be finite or +inf")

    @property
    def n_players(self) -> int:
        return self.costs.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.costs.shape[1:]

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def cell(self, profile: Sequence[int]) -> np.ndarray:
        return self.costs[(slice(None),) + tuple(profile)]


@dataclass(frozen=True)
class EquilibriumResult:
    kind: str
    profile: tuple[int, ...]
    equilibria_found: int
    ego_cost: float


def check_budget(shape: Sequence[int], budget: int = DEFAULT_CELL_BUDGET) -> None:
    n = 1
    for s in shape:
        n *= int(s)
    if n > budget:
        raise TensorBudgetError(f"joint strategy space has {n} cells, budget is {budget}")


def _along(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = vec.shape[0]
    return vec.reshape(shape)


def _pair_block(mat: np.ndarray, a: int, b: int, ndim: int) -> np.ndarray:
    """Place an ``(s_a, s_b)`` matrix (``a < b``) on axes ``a`` and ``b``."""
    shape = [1] * ndim
    shape[a] = mat.shape[0]
    shape[b] = mat.shape[1]
    return mat.reshape(shape)


def _lane_goal_terms(paths: np.ndarray, spec) -> tuple[np.ndarray, np.ndarray]:
    S = paths.shape[0]
    lane = np.zeros(S)
    goal = np.zeros(S)
    if spec.reference_path is not None:
        off = spec.reference_path.distance_to(paths)
        lane = np.sum(off[:, :-1] * off[:, 1:], axis=1)
    if spec.goal is not None:
        g = np.hypot(paths[:, :, 0] - spec.goal.x, paths[:, :, 1] - spec.goal.y)
        goal = np.sum(g[:, :-1] * g[:, 1:], axis=1)
    return lane, goal


def build_payoff_tensor(
    candidates: CandidateSet,
    specs,
    weights: Optional[CostWeights] = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> PayoffTensor:
    """Exhaustive cost table over every joint profile."""
    w = weights or CostWeights()
    shape = candidates.shape
    check_budget(shape, cell_budget)
    n = candidates.n_agents
    depth = candidates.depth
    paths = candidates.paths
    costs = np.zeros((n,) + shape)

    # pairwise node-distance products per step, shared by both players of a pair
    pair = {}
    for i in range(n):
        for l in range(i + 1, n):
            di = paths[i][:, None, :, :] - paths[l][None, :, :, :]
            d = np.hypot(di[..., 0], di[..., 1])
            pair[i, l] = d[:, :, :-1] * d[:, :, 1:]

    for i in range(n):
        lane, goal = _lane_goal_terms(paths[i], specs[i])
        total = np.zeros(shape)
        if w.lane:
            total = total + w.lane * _along(lane, i, n)
        if n > 1:
            c_dist = np.zeros(shape)
            collided = np.zeros(shape, dtype=bool)
            for k in range(depth):
                acc = np.zeros(shape)
                for l in range(n):
                    if l == i:
                        continue
                    a, b = min(i, l), max(i, l)
                    acc = acc + _pair_block(pair[a, b][:, :, k], a, b, n)
                small = acc < COLLISION_EPS
                collided |= small
                c_dist = c_dist + 1.0 / np.where(small, 1.0, acc)
            if w.dist:
                total = total + w.dist * c_dist
            total = np.where(collided, COLLISION, total)
        if w.goal:
            total = total + w.goal * _along(goal, i, n)
        costs[i] = total
    return PayoffTensor(costs)


def find_pure_nash(tensor: PayoffTensor) -> list[tuple[int, ...]]:
    """All profiles where no player can lower its cost by a unilateral switch.

    Each cell is compared against the best unilateral deviation of every
    player (non-strict, no tolerance).  Output is in lexicographic order.
    """
    ok = np.ones(tensor.shape, dtype=bool)
    for i in range(tensor.n_players):
        best = tensor.costs[i].min(axis=i, keepdims=True)
        ok &= tensor.costs[i] <= best
    return [tuple(int(b) for b in idx) for idx in np.argwhere(ok)]


def is_pure_nash(tensor: PayoffTensor, profile: Sequence[int]) -> bool:
    """Re-check a profile by enumerating every unilateral deviation."""
    profile = tuple(profile)
    for i in range(tensor.n_players):
        own = tensor.costs[(i,) + profile]
        for b in range(tensor.shape[i]):
            dev = profile[:i] + (b,) + profile[i + 1 :]
            if own > tensor.costs[(i,) + dev]:
                return False
    return True


def regrets(tensor: PayoffTensor) -> np.ndarray:
    """Per-player regret of every cell, shape ``(N, s_1, ..., s_N)``."""
    out = np.empty_like(tensor.costs)
    for i in range(tensor.n_players):
        c = tensor.costs[i]
        best = c.min(axis=i, keepdims=True)
        both_inf = np.isinf(c) & np.isinf(best)
        with np.errstate(invalid="ignore"):
            out[i] = np.where(both_inf, 0.0, c - best)
    return out


def select_equilibrium(tensor: PayoffTensor, equilibria: Sequence[Sequence[int]], ego: int) -> EquilibriumResult:
    if equilibria:
        def key(p):
            cell = tensor.cell(p)
            return (cell[ego], float(np.sum(cell)), tuple(p))

        best = min((tuple(p) for p in equilibria), key=key)
        return EquilibriumResult(PURE_NASH, best, len(equilibria), float(tensor.cell(best)[ego]))
    total = regrets(tensor).sum(axis=0)
    flat = int(np.argmin(total))
    profile = tuple(int(b) for b in np.unravel_index(flat, tensor.shape))
    return EquilibriumResult(FALLBACK_MIN_REGRET, profile, 0, float(tensor.cell(profile)[ego]))


def solve(tensor: PayoffTensor, ego: int) -> EquilibriumResult:
    return select_equilibrium(tensor, find_pure_nash(tensor), ego)


def all_profiles(shape: Sequence[int]):
    return itertools.product(*(range(s) for s in shape))
