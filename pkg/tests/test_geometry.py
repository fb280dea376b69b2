import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nashplan.geometry import Point2, Polyline, dist, dot, heading_line_intersection, wrap_angle

coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2(math.nan, 0.0)
    with pytest.raises(ValueError):
        Point2(0.0, math.inf)


@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0), ((1, 1), (1, 4), 3.0)],
)
def test_dist_examples(a, b, expected):
    assert dist(Point2(*a), Point2(*b)) == expected


@given(coord, coord, coord, coord, coord, coord)
def test_dist_is_a_metric(ax, ay, bx, by, cx, cy):
    a, b, c = Point2(ax, ay), Point2(bx, by), Point2(cx, cy)
    assert dist(a, b) == dist(b, a)
    assert dist(a, b) >= 0
    assert (dist(a, b) == 0) == (a == b)
    assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9


@pytest.mark.parametrize("u, v, expected", [((1, 0), (0, 1), 0), ((1, 2), (3, 4), 11), ((1, 0), (-1, 0), -1)])
def test_dot_examples(u, v, expected):
    assert dot(u, v) == expected


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


class TestPolyline:
    seg = Polyline([(0, 0), (5, 0)])

    def test_rejects_bad_vertices(self):
        with pytest.raises(ValueError):
            Polyline([(0, 0)])
        with pytest.raises(ValueError):
            Polyline([(0, 0), (0, 0), (1, 0)])
        with pytest.raises(ValueError):
            Polyline([(0, 0), (math.nan, 1)])

    def test_projection_examples(self):
        assert self.seg.project((2.5, 0))[0] == Point2(2.5, 0)
        assert self.seg.project((1, 2))[0] == Point2(1, 0)
        assert self.seg.project((-1, 1))[0] == Point2(0, 0)

    def test_projection_tie_takes_smallest_arc_length(self):
        # (1, 1) is exactly 1 m from both legs: (1, 0) at s=1 and (2, 1) at s=3
        path = Polyline([(0, 0), (2, 0), (2, 2)])
        q, s = path.project((1.0, 1.0))
        assert s == 1.0 and q == Point2(1, 0)

    def test_point_at_and_heading(self):
        path = Polyline([(0, 0), (3, 0), (3, 4)])
        assert path.length == 7
        assert path.point_at(5) == Point2(3, 2)
        assert path.heading_at(1) == 0.0
        assert path.heading_at(4) == pytest.approx(math.pi / 2)

    def test_signed_offset_is_positive_left(self):
        assert self.seg.signed_offset((2, 1)) == 1.0
        assert self.seg.signed_offset((2, -1)) == -1.0

    def test_distance_to_matches_project(self):
        path = Polyline([(0, 0), (3, 1), (4, 5), (-2, 6)])
        pts = np.random.default_rng(0).uniform(-5, 8, (50, 2))
        expect = [dist(p, path.project(p)[0]) for p in pts]
        np.testing.assert_allclose(path.distance_to(pts), expect, rtol=0, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_projection_optimality(self, seed):
        rng = np.random.default_rng(seed)
        verts = rng.uniform(-10, 10, (rng.integers(2, 6), 2))
        path = Polyline(verts)
        p = rng.uniform(-15, 15, 2)
        best = dist(p, path.project(p)[0])
        samples = rng.uniform(0, path.length, 1000)
        for s in samples:
            assert best <= dist(p, path.point_at(s)) + 1e-12


class TestHeadingLineIntersection:
    def test_examples(self):
        assert heading_line_intersection(Point2(0, 0), 0.0, Point2(5, -5), math.pi / 2) == pytest.approx(Point2(5, 0))
        assert heading_line_intersection(Point2(0, 0), 0.0, Point2(0, 3), 0.0) is None
        q = heading_line_intersection(Point2(0, 0), math.pi / 4, Point2(2, 0), 3 * math.pi / 4)
        assert q.x == pytest.approx(1) and q.y == pytest.approx(1)

    def test_antiparallel_is_parallel(self):
        assert heading_line_intersection(Point2(0, 0), 0.0, Point2(4, 1), math.pi) is None

    @given(coord, coord, angle, coord, coord, angle)
    def test_residual_on_both_lines(self, xe, ye, pe, xn, yn, pn):
        assume(abs(math.sin(pe - pn)) > 1e-3)
        q = heading_line_intersection(Point2(xe, ye), pe, Point2(xn, yn), pn)
        assert q is not None
        # perpendicular distance of q to each line, scaled to the geometry size
        scale = max(1.0, abs(q.x), abs(q.y), abs(xe), abs(ye), abs(xn), abs(yn))
        for (x0, y0, ph) in ((xe, ye, pe), (xn, yn, pn)):
            r = -(q.x - x0) * math.sin(ph) + (q.y - y0) * math.cos(ph)
            assert abs(r) < 1e-9 * scale

    @given(coord, coord, angle, coord, coord, angle)
    def test_agrees_with_tan_cot_form(self, xe, ye, pe, xn, yn, pn):
        # slope form is only defined off the axis headings and for non-parallel lines
        for ph in (pe, pn):
            assume(0.05 < abs(math.sin(ph)) and 0.05 < abs(math.cos(ph)))
        assume(abs(math.sin(pe - pn)) > 0.05)
        te, tn = math.tan(pe), math.tan(pn)
        ce, cn = 1 / te, 1 / tn
        x_c = ((yn - ye) - (xn * tn - xe * te)) / (te - tn)
        y_c = ((xn - xe) - (yn * cn - ye * ce)) / (ce - cn)
        q = heading_line_intersection(Point2(xe, ye), pe, Point2(xn, yn), pn)
        assume(abs(x_c) < 1e4 and abs(y_c) < 1e4)
        assert q.x == pytest.approx(x_c, abs=1e-6, rel=1e-9)
        assert q.y == pytest.approx(y_c, abs=1e-6, rel=1e-9)


def test_circle_intersection_ahead():
    path = Polyline([(-10, 0), (10, 0)])
    s = path.circle_intersection_ahead((0, 1), 5.0, path.project((0, 1))[1])
    assert path.point_at(s).x == pytest.approx(math.sqrt(24))
    assert path.circle_intersection_ahead((0, 20), 5.0, 0.0) is None
