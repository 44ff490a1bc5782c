import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrstab.geometry import (ConvexPolygon, contains, convex_hull, hausdorff_distance,
                             minkowski_sum, minkowski_sum_all, point_distance, scale)

coord = st.floats(min_value=-5, max_value=5, allow_nan=False).map(lambda v: round(v, 6))
point_sets = st.lists(st.tuples(coord, coord), min_size=1, max_size=12)
directions = st.floats(min_value=0, max_value=2 * math.pi)


def _dir(t):
    return (math.cos(t), math.sin(t))


def _brute_support(points, d):
    return max(p[0] * d[0] + p[1] * d[1] for p in points)


class TestHull:
    def test_square_with_interior_and_collinear_points(self):
        pts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.5, 0), (1, 0.5)]
        hull = convex_hull(pts)
        np.testing.assert_array_equal(hull.vertices, [[0, 0], [1, 0], [1, 1], [0, 1]])
        assert hull.area() == pytest.approx(1.0)

    def test_degenerate_inputs(self):
        assert convex_hull([(1, 2), (1, 2)]).is_point
        seg = convex_hull([(0, 0), (2, 0), (1, 0)])
        assert seg.is_segment and seg.area() == 0.0
        with pytest.raises(ValueError):
            convex_hull([])
        with pytest.raises(ValueError):
            convex_hull([(0, math.nan)])

    @settings(max_examples=150, deadline=None)
    @given(point_sets)
    def test_idempotent(self, pts):
        h = convex_hull(pts)
        assert convex_hull(h.vertices) == h

    @settings(max_examples=150, deadline=None)
    @given(point_sets, directions)
    def test_support_matches_points(self, pts, t):
        d = _dir(t)
        assert convex_hull(pts).support(d) == pytest.approx(_brute_support(pts, d), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(point_sets)
    def test_counter_clockwise(self, pts):
        h = convex_hull(pts)
        assert h.area() >= 0


class TestMinkowski:
    def test_pentagon_sum_of_unit_square_and_triangle(self):
        sq = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
        tri = convex_hull([(0, 0), (1, 0), (0, 1)])
        s = minkowski_sum(sq, tri)
        assert s.area() == pytest.approx(1 + 0.5 + 2 * 1.0)
        assert s.support((1, 1)) == pytest.approx(3.0)

    @settings(max_examples=150, deadline=None)
    @given(point_sets, point_sets)
    def test_matches_pairwise_sum_hull(self, a, b):
        pa, pb = convex_hull(a), convex_hull(b)
        oracle = convex_hull([(x[0] + y[0], x[1] + y[1]) for x in pa.vertices
                              for y in pb.vertices])
        assert hausdorff_distance(minkowski_sum(pa, pb), oracle) <= 1e-9

    @settings(max_examples=150, deadline=None)
    @given(point_sets, point_sets, directions)
    def test_support_additive(self, a, b, t):
        pa, pb = convex_hull(a), convex_hull(b)
        d = _dir(t)
        assert minkowski_sum(pa, pb).support(d) == pytest.approx(
            pa.support(d) + pb.support(d), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(point_sets, point_sets, st.floats(min_value=0, max_value=3))
    def test_scale_distributes(self, a, b, k):
        pa, pb = convex_hull(a), convex_hull(b)
        lhs = scale(minkowski_sum(pa, pb), k)
        rhs = minkowski_sum(scale(pa, k), scale(pb, k))
        assert hausdorff_distance(lhs, rhs) <= 1e-8

    def test_sum_all_starts_at_origin(self):
        assert minkowski_sum_all([]).is_point
        seg = convex_hull([(0, 0), (1, 0)])
        out = minkowski_sum_all([scale(seg, 0.5), scale(seg, 0.5)])
        np.testing.assert_allclose(out.vertices, [[0, 0], [1, 0]])

    def test_scale_rejects_negative(self):
        with pytest.raises(ValueError):
            scale(convex_hull([(0, 0), (1, 1)]), -1)


class TestDistances:
    def test_point_distance(self):
        sq = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
        assert point_distance(sq, (0.5, 0.5)) == 0.0
        assert point_distance(sq, (2, 0.5)) == pytest.approx(1.0)
        assert point_distance(sq, (2, 2)) == pytest.approx(math.sqrt(2))

    def test_containment_and_hausdorff(self):
        sq = convex_hull([(0, 0), (0.5, 0), (0.5, 0.5), (0, 0.5)])
        tri = convex_hull([(0, 0), (0.5, 0), (0, 0.5)])
        assert contains(sq, tri, 0.0)
        assert not contains(tri, sq, 0.0)
        assert hausdorff_distance(sq, tri) == pytest.approx(0.25 * math.sqrt(2))
        assert hausdorff_distance(sq, sq) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(point_sets, point_sets)
    def test_hausdorff_symmetric(self, a, b):
        pa, pb = convex_hull(a), convex_hull(b)
        assert hausdorff_distance(pa, pb) == pytest.approx(hausdorff_distance(pb, pa))


class TestSerialization:
    def test_csv_round_trip_and_format(self):
        poly = convex_hull([(0, 0), (math.exp(-1), 0), (0, 1 / 3)])
        text = poly.to_csv()
        assert text.splitlines()[0] == "x,y"
        assert "0.367879441" in text
        assert "-0" not in text
        back = ConvexPolygon.from_csv(text)
        assert hausdorff_distance(back, poly) < 1e-9

    def test_json_round_trip(self):
        poly = convex_hull([(0, 0), (1, 0), (0, 1)])
        assert ConvexPolygon.from_json(poly.to_json()) == poly
