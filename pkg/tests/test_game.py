import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashplan.agents import AgentSpec, AgentState, SearchParams
from nashplan.costs import CandidateSet, CostWeights, total_cost
from nashplan.game import (
    FALLBACK_MIN_REGRET,
    PURE_NASH,
    PayoffTensor,
    TensorBudgetError,
    build_payoff_tensor,
    find_pure_nash,
    is_pure_nash,
    select_equilibrium,
    solve,
)
from nashplan.geometry import Point2, Polyline
from nashplan.nash_planner import multi_step_tree


def brute_force_nash(costs):
    """Naive check: loop every cell and every single-player switch."""
    n = costs.shape[0]
    shape = costs.shape[1:]
    found = []
    for prof in itertools.product(*(range(s) for s in shape)):
        stable = True
        for i in range(n):
            for alt in range(shape[i]):
                dev = list(prof)
                dev[i] = alt
                if costs[(i, *prof)] > costs[(i, *dev)]:
                    stable = False
        if stable:
            found.append(prof)
    return found


def random_tensor(rng, integer=False):
    n = int(rng.integers(2, 4))
    shape = tuple(int(s) for s in rng.integers(1, 5, n))
    if integer:
        return rng.integers(0, 4, (n,) + shape).astype(float)
    return rng.uniform(0, 1, (n,) + shape)


def bimatrix(j1, j2):
    return PayoffTensor(np.array([j1, j2], dtype=float))


class TestFindPureNash:
    def test_one_by_one(self):
        assert find_pure_nash(PayoffTensor(np.array([[[7.0]], [[2.0]]]))) == [(0, 0)]

    def test_dominant_strategies(self):
        assert find_pure_nash(bimatrix([[1, 1], [2, 2]], [[1, 2], [1, 2]])) == [(0, 0)]

    def test_matching_pennies(self):
        assert find_pure_nash(bimatrix([[0, 1], [1, 0]], [[1, 0], [0, 1]])) == []

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_matches_brute_force(self, seed, integer):
        # integer costs force many exact ties, which exercises the non-strict check
        costs = random_tensor(np.random.default_rng(seed), integer)
        t = PayoffTensor(costs)
        assert find_pure_nash(t) == brute_force_nash(costs)
        for p in find_pure_nash(t):
            assert is_pure_nash(t, p)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["exp", "cube", "affine"]))
    def test_monotone_transform_invariance(self, seed, kind):
        rng = np.random.default_rng(seed)
        costs = random_tensor(rng)
        i = int(rng.integers(costs.shape[0]))
        moved = costs.copy()
        f = {"exp": np.exp, "cube": lambda x: x**3 + x, "affine": lambda x: 3.0 * x + 2.0}[kind]
        moved[i] = f(moved[i])
        assert find_pure_nash(PayoffTensor(moved)) == find_pure_nash(PayoffTensor(costs))

    def test_sentinel_cell_is_not_stable_with_finite_alternative(self):
        j1 = [[math.inf, 1.0], [2.0, 1.0]]
        j2 = [[0.0, 5.0], [0.0, 5.0]]
        eq = find_pure_nash(bimatrix(j1, j2))
        assert (0, 0) not in eq and eq == [(1, 0)]


class TestSelect:
    def test_single(self):
        t = bimatrix([[1, 1], [2, 2]], [[1, 2], [1, 2]])
        r = solve(t, 0)
        assert (r.kind, r.profile, r.equilibria_found, r.ego_cost) == (PURE_NASH, (0, 0), 1, 1.0)

    @pytest.mark.parametrize("j1, expected", [([[3, 9], [9, 5]], (0, 0)), ([[5, 9], [9, 3]], (1, 1))])
    def test_lowest_ego_cost(self, j1, expected):
        t = bimatrix(j1, [[1, 9], [9, 1]])
        assert find_pure_nash(t) == [(0, 0), (1, 1)]
        r = solve(t, 0)
        assert r.profile == expected and r.ego_cost == 3.0

    def test_tie_on_ego_cost_uses_total(self):
        t = bimatrix([[3, 9], [9, 3]], [[4, 9], [9, 1]])
        assert solve(t, 0).profile == (1, 1)

    def test_full_tie_is_lexicographic(self):
        t = bimatrix([[3, 9], [9, 3]], [[1, 9], [9, 1]])
        assert solve(t, 0).profile == (0, 0)

    def test_matching_pennies_fallback(self):
        t = bimatrix([[0, 1], [1, 0]], [[1, 0], [0, 1]])
        r = select_equilibrium(t, [], 0)
        # every cell has total regret 1, so the first cell wins
        assert r.kind == FALLBACK_MIN_REGRET and r.profile == (0, 0) and r.equilibria_found == 0

    def test_fallback_picks_min_regret(self):
        j1 = [[0, 1], [1, 0]]
        j2 = [[1, 0], [0, 1.5]]
        # regret oracle computed by brute force below
        costs = np.array([j1, j2], dtype=float)
        t = PayoffTensor(costs)
        eq = find_pure_nash(t)
        assert eq == []
        best, arg = math.inf, None
        for p in itertools.product(range(2), range(2)):
            r = sum(costs[(i, *p)] - min(costs[(i, *(p[:i] + (b,) + p[i + 1:]))] for b in range(2)) for i in range(2))
            if r < best:
                best, arg = r, p
        res = select_equilibrium(t, eq, 0)
        assert res.kind == FALLBACK_MIN_REGRET and res.profile == arg

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_deterministic(self, seed):
        costs = random_tensor(np.random.default_rng(seed), integer=True)
        assert solve(PayoffTensor(costs), 0) == solve(PayoffTensor(costs.copy()), 0)


def test_tensor_rejects_nan():
    with pytest.raises(ValueError):
        PayoffTensor(np.array([[[math.nan]]]))


def _spec(i, path=None, goal=None, s=3):
    return AgentSpec(f"a{i}", "ego" if i == 0 else "vehicle", AgentState(Point2(0, 0), 0, 1), path, goal, s)


class TestBuild:
    @pytest.mark.parametrize("shape", [(2, 2), (3,), (3, 3, 3)])
    def test_shape(self, shape):
        rng = np.random.default_rng(0)
        c = CandidateSet.single_step(rng.uniform(-5, 5, (len(shape), 2)), [rng.uniform(-5, 5, (s, 2)) for s in shape])
        t = build_payoff_tensor(c, [_spec(i, s=s) for i, s in enumerate(shape)])
        assert t.shape == shape and t.n_cells == math.prod(shape) and t.costs.shape == (len(shape),) + shape

    def test_single_player_has_no_distance_term(self):
        c = CandidateSet.single_step([(0, 1)], [[(1, 1), (1, 2), (1, 0.5)]])
        path = Polyline([(-5, 0), (5, 0)])
        t = build_payoff_tensor(c, [_spec(0, path)])
        np.testing.assert_allclose(t.costs[0], [1.0, 2.0, 0.5])

    def test_budget_guard(self):
        c = CandidateSet.single_step([(0, 0), (9, 9)], [np.zeros((5, 2)), np.ones((5, 2))])
        with pytest.raises(TensorBudgetError):
            build_payoff_tensor(c, [_spec(0, s=5), _spec(1, s=5)], cell_budget=24)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 2))
    def test_vectorized_matches_scalar_costs(self, seed, depth):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        search = SearchParams(0.5, 0.3, depth)
        specs, paths = [], []
        for i in range(n):
            s = int(rng.choice([1, 3]))
            st0 = AgentState(Point2(*rng.uniform(-4, 4, 2)), rng.uniform(-3, 3), rng.uniform(0, 3))
            path = Polyline(rng.uniform(-6, 6, (3, 2))) if rng.random() < 0.7 else None
            goal = Point2(*rng.uniform(-6, 6, 2)) if rng.random() < 0.5 else None
            specs.append(AgentSpec(f"a{i}", "vehicle", st0, path, goal, s))
            paths.append(multi_step_tree(st0, search, s)[0])
        cands = CandidateSet(paths)
        w = CostWeights(lane=rng.uniform(0.5, 2), dist=rng.uniform(0.5, 2), goal=rng.uniform(0.5, 2))
        t = build_payoff_tensor(cands, specs, w)
        for prof in itertools.product(*(range(k) for k in cands.shape)):
            for i in range(n):
                want = total_cost(i, prof, cands, specs, w).total
                got = t.costs[(i, *prof)]
                if math.isinf(want):
                    assert got == want
                else:
                    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)
