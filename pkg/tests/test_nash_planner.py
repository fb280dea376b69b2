import math

import numpy as np
import pytest

from nashplan.agents import AgentSpec, AgentState, SearchParams, candidate_positions
from nashplan.game import PURE_NASH, is_pure_nash
from nashplan.geometry import Point2, Polyline, dist
from nashplan.nash_planner import multi_step_candidates, multi_step_tree, plan_horizon, plan_step
from nashplan.speed import DECELERATE, HOLD, SpeedModParams

SPEED = SpeedModParams(z=2.0, delta_v=0.5)


def make(id_, role, x, y, phi, v, path=None, goal=None, s=3):
    st = AgentState(Point2(x, y), phi, v)
    return AgentSpec(id_, role, st, path, goal, s), st


def test_single_ego_on_straight_path_keeps_heading():
    sp, st = make("e", "ego", 0, 0, 0.0, 2.0, Polyline([(-5, 0), (50, 0)]), s=5)
    step = plan_step([st], [sp], SearchParams(0.5, 0.2), SPEED)
    assert step.equilibrium.profile == (0,)
    assert step.ego_next == Point2(1.0, 0.0)
    assert step.speed_decision.action == HOLD and step.new_speed == 2.0


def _crossing_distance_costs(states, search):
    """Hand-style 3x3 table of inverse distance products for two agents."""
    ca = candidate_positions(states[0], search, 3)
    cb = candidate_positions(states[1], search, 3)
    d0 = dist(states[0].position, states[1].position)
    return np.array([[1.0 / (d0 * dist(a, b)) for b in cb] for a in ca])


def test_symmetric_crossing_agents_steer_apart():
    # A heads east from the west, B heads north from the south; they meet at the origin
    sa, a = make("a", "ego", -1.0, 0.0, 0.0, 1.0)
    sb, b = make("b", "vehicle", 0.0, -1.0, math.pi / 2, 1.0)
    search = SearchParams(0.5, 0.5)
    step = plan_step([a, b], [sa, sb], search, SPEED)
    table = _crossing_distance_costs([a, b], search)
    # both players see the same symmetric payoff; pure Nash are the cells
    # that are row- and column-minimal
    eq = [(i, j) for i in range(3) for j in range(3) if table[i, j] <= table[:, j].min() and table[i, j] <= table[i, :].min()]
    assert step.equilibrium.kind == PURE_NASH
    assert step.equilibrium.profile in eq
    # A turns left (+dtheta, index 1, away from B); B turns right (-dtheta, index 2, away from A)
    assert step.equilibrium.profile == (1, 2)
    assert dist(step.ego_next, step.predictions[1][0]) > max(dist(p, q) for p in candidate_positions(a, search, 1) for q in candidate_positions(b, search, 1))


def test_ego_inside_safe_space_decelerates():
    se, e = make("e", "ego", 0, 0, 0.0, 1.0)
    so, o = make("o", "vehicle", 5, -5, math.pi / 2, 1.0)
    step = plan_step([e, o], [se, so], SearchParams(0.1, 0.1), SpeedModParams(z=2.0, delta_v=0.5))
    assert step.speed_decision.action == DECELERATE and step.new_speed == 0.5


class TestMultiStep:
    st = AgentState(Point2(1, 2), 0.4, 2.0)

    def test_depth_one_is_candidate_positions(self):
        seqs = multi_step_candidates(self.st, SearchParams(0.5, 0.2, 1), 5)
        assert [s[0] for s in seqs] == candidate_positions(self.st, SearchParams(0.5, 0.2), 5)

    def test_depth_two_grouping(self):
        seqs = multi_step_candidates(self.st, SearchParams(0.5, 0.2, 2), 3)
        assert len(seqs) == 9
        first = [s[0] for s in seqs]
        assert first == [p for p in candidate_positions(self.st, SearchParams(0.5, 0.2), 3) for _ in range(3)]
        # second step fans around the first-step heading
        paths, heads = multi_step_tree(self.st, SearchParams(0.5, 0.2, 2), 3)
        assert heads[4, 0] == pytest.approx(0.6) and heads[4, 1] == pytest.approx(0.8)
        assert heads[5, 1] == pytest.approx(0.4)

    def test_depth_two_single_branch_is_straight(self):
        (seq,) = multi_step_candidates(self.st, SearchParams(0.5, 0.2, 2), 1)
        for k, p in enumerate(seq, start=1):
            assert p.x == pytest.approx(1 + k * math.cos(0.4)) and p.y == pytest.approx(2 + k * math.sin(0.4))


class TestHorizon:
    def test_one_tick(self):
        sp, st = make("e", "ego", 0, 0, 0, 1.0, Polyline([(0, 0), (9, 0)]))
        tr = plan_horizon([st], [sp], SearchParams(0.1, 0.1), SPEED, 1)
        assert len(tr) == 1 and tr.ego_path().shape == (2, 2)

    def test_stationary_ego(self):
        sp, st = make("e", "ego", 3, 4, 1.0, 0.0)
        tr = plan_horizon([st], [sp], SearchParams(0.1, 0.1), SPEED, 5)
        assert len(tr) == 5
        assert all(s.ego_next == Point2(3, 4) for s in tr.steps)

    def test_invalid_horizon(self):
        sp, st = make("e", "ego", 0, 0, 0, 1.0)
        with pytest.raises(ValueError):
            plan_horizon([st], [sp], SearchParams(0.1, 0.1), SPEED, 0)

    def _crossing(self, depth=1):
        sa, a = make("a", "ego", -5, 0, 0.0, 2.0, Polyline([(-10, 0), (10, 0)]), s=5)
        sb, b = make("b", "vehicle", 0, -5, math.pi / 2, 2.0, Polyline([(0, -10), (0, 10)]), s=5)
        return [a, b], [sa, sb], SearchParams(0.5, 0.2, depth)

    def test_crossing_trace_properties(self):
        states, specs, search = self._crossing()
        tr = plan_horizon(states, specs, search, SpeedModParams(z=2.0, delta_v=0.2), 12)
        assert min(dist(s[0].position, s[1].position) for s in tr.states) > 0
        for k, step in enumerate(tr.steps):
            cur = tr.states[k][0]
            cands = candidate_positions(cur, search, specs[0].branch_count)
            assert step.ego_next in cands
            assert abs(dist(step.ego_next, cur.position) - search.k_v * cur.speed) < 1e-12
            if step.equilibrium.kind == PURE_NASH:
                assert is_pure_nash(step.tensor, step.equilibrium.profile)

    def test_deterministic(self):
        states, specs, search = self._crossing()
        p = SpeedModParams(z=2.0, delta_v=0.2)
        a = plan_horizon(states, specs, search, p, 8)
        b = plan_horizon(states, specs, search, p, 8)
        assert [s.ego_next for s in a.steps] == [s.ego_next for s in b.steps]
        assert all(np.array_equal(x.tensor.costs, y.tensor.costs) for x, y in zip(a.steps, b.steps))

    def test_depth_two_runs_and_commits_first_node(self):
        states, specs, search = self._crossing(depth=2)
        step = plan_step(states, specs, search, SPEED)
        assert step.tensor.shape == (25, 25)
        path = step.planned_path(0)
        assert Point2(*path[1]) == step.ego_next
