"""Geometry: direction targets, pair intersection, size algebra, and the
analytic pair-vote covariance against independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voteloc.errors import (
    DegeneratePoint,
    InvalidSize,
    ParallelConfiguration,
)
from voteloc.geometry import (
    BBox,
    PairGeometry,
    Point2,
    RelSize,
    UnitDir,
    absolute_size_from_vote,
    center_direction,
    cov_analytic,
    cov_det_analytic,
    intersect_pair,
    intersection_jacobian,
    jacobian_det,
    pair_frame,
    relative_size,
)

# some fixed non-axis-aligned directions
D_RIGHT = UnitDir(1.0, 0.0)
D_UP = UnitDir(0.0, -1.0)
D_DOWN = UnitDir(0.0, 1.0)


def unit(dx, dy):
    n = math.hypot(dx, dy)
    return UnitDir(dx / n, dy / n)


finite_coord = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


class TestTypes:
    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point2(float("nan"), 0.0)

    def test_unitdir_rejects_non_unit(self):
        with pytest.raises(ValueError):
            UnitDir(1.0, 1.0)

    def test_bbox_rejects_nonpositive_size(self):
        with pytest.raises(InvalidSize):
            BBox(0, 0, 0.0, 1.0)
        with pytest.raises(InvalidSize):
            BBox(0, 0, 1.0, -2.0)

    def test_bbox_edges(self):
        b = BBox(10.0, 20.0, 4.0, 6.0)
        assert (b.x0, b.y0, b.x1, b.y1) == (8.0, 17.0, 12.0, 23.0)
        assert b.area == 24.0
        assert b.contains(10.0, 20.0)
        assert not b.contains(12.1, 20.0)


class TestCenterDirection:
    def test_points_toward_center(self):
        d = center_direction(Point2(0.0, 0.0), Point2(3.0, 4.0))
        assert d.dx == pytest.approx(0.6)
        assert d.dy == pytest.approx(0.8)

    def test_degenerate_point(self):
        with pytest.raises(DegeneratePoint):
            center_direction(Point2(5.0, 5.0), Point2(5.0, 5.0))

    @given(finite_coord, finite_coord, finite_coord, finite_coord)
    def test_unit_norm(self, px, py, ox, oy):
        if math.hypot(ox - px, oy - py) < 1e-6:
            return
        d = center_direction(Point2(px, py), Point2(ox, oy))
        assert math.hypot(d.dx, d.dy) == pytest.approx(1.0, abs=1e-9)


class TestIntersectPair:
    def test_simple_crossing(self):
        # rays from (0,0) heading right and from (4,3) heading up meet at (4,0)
        c = intersect_pair(Point2(0, 0), D_RIGHT, Point2(4, 3), D_UP)
        assert c is not None
        assert (c.x, c.y) == (pytest.approx(4.0), pytest.approx(0.0))

    def test_parallel_returns_none(self):
        assert intersect_pair(Point2(0, 0), D_RIGHT, Point2(0, 1), D_RIGHT) is None

    def test_behind_first_ray(self):
        # crossing point (-2, 0) is behind the first ray
        assert intersect_pair(Point2(0, 0), D_RIGHT, Point2(-2, 3), D_UP) is None

    def test_behind_second_ray_both_mode(self):
        # second ray points down but the crossing is above it
        assert intersect_pair(Point2(0, 0), D_RIGHT, Point2(4, 3), D_DOWN) is None

    def test_behind_second_ray_one_mode(self):
        c = intersect_pair(Point2(0, 0), D_RIGHT, Point2(4, 3), D_DOWN, ray_check="one")
        assert c is not None
        assert (c.x, c.y) == (pytest.approx(4.0), pytest.approx(0.0))

    def test_bad_ray_check_value(self):
        with pytest.raises(ValueError):
            intersect_pair(Point2(0, 0), D_RIGHT, Point2(4, 3), D_UP, ray_check="none")

    @given(
        st.floats(-100, 100), st.floats(-100, 100), angle,
        st.floats(-100, 100), st.floats(-100, 100), angle,
    )
    @settings(max_examples=200)
    def test_intersection_lies_on_both_rays(self, x1, y1, a1, x2, y2, a2):
        p1, p2 = Point2(x1, y1), Point2(x2, y2)
        d1 = UnitDir(math.cos(a1), math.sin(a1))
        d2 = UnitDir(math.cos(a2), math.sin(a2))
        c = intersect_pair(p1, d1, p2, d2)
        if c is None:
            return
        # c - p_i must be a non-negative multiple of d_i
        for p, d in ((p1, d1), (p2, d2)):
            vx, vy = c.x - p.x, c.y - p.y
            cross = vx * d.dy - vy * d.dx
            assert abs(cross) < 1e-6 * max(1.0, abs(vx), abs(vy))
            assert vx * d.dx + vy * d.dy > -1e-9


class TestSizes:
    def test_relative_size_quarters(self):
        # point at the top-left corner of a box sits at (-1/2, -1/2)
        s = relative_size(Point2(0.0, 0.0), Point2(50.0, 30.0), (100.0, 60.0))
        assert (s.sx, s.sy) == (pytest.approx(-0.5), pytest.approx(-0.5))

    def test_relative_size_rejects_bad_box(self):
        with pytest.raises(InvalidSize):
            relative_size(Point2(0, 0), Point2(1, 1), (0.0, 5.0))

    def test_absolute_size_roundtrip(self):
        c = Point2(50.0, 30.0)
        p = Point2(80.0, 45.0)
        s = relative_size(p, c, (100.0, 60.0))
        w, h = absolute_size_from_vote(p, c, s)
        assert w == pytest.approx(100.0)
        assert h == pytest.approx(60.0)

    def test_absolute_size_suppresses_small_ratio(self):
        w, h = absolute_size_from_vote(Point2(1, 1), Point2(0, 0), RelSize(0.01, 0.3))
        assert w is None
        assert h is not None

    @given(
        st.floats(-200, 200), st.floats(-200, 200),
        st.floats(1.0, 500.0), st.floats(1.0, 500.0),
        st.floats(-0.5, 0.5), st.floats(-0.5, 0.5),
    )
    def test_roundtrip_property(self, cx, cy, w, h, sx, sy):
        # build the point from the relative size, then invert
        c = Point2(cx, cy)
        p = Point2(cx + sx * w, cy + sy * h)
        s = relative_size(p, c, (w, h))
        got_w, got_h = absolute_size_from_vote(p, c, s)
        if abs(s.sx) >= 0.02:
            assert got_w == pytest.approx(w, rel=1e-9)
        else:
            assert got_w is None
        if abs(s.sy) >= 0.02:
            assert got_h == pytest.approx(h, rel=1e-9)
        else:
            assert got_h is None


CANONICAL = PairGeometry(1.0, 1.0, 0.0, -math.pi / 4, 0.005)


class TestCovariance:
    def test_det_canonical_value(self):
        # direct substitution at a=b=1, beta=-pi/4 gives exactly -4
        assert jacobian_det(CANONICAL) == pytest.approx(-4.0, rel=1e-12)

    def test_det_requires_canonical_frame(self):
        with pytest.raises(ValueError):
            jacobian_det(PairGeometry(1, 1, 0.3, -1.0, 0.01))

    def test_parallel_raises(self):
        with pytest.raises(ParallelConfiguration):
            jacobian_det(PairGeometry(1, 1, 0.0, 0.0, 0.01))
        with pytest.raises(ParallelConfiguration):
            intersection_jacobian(PairGeometry(1, 1, 0.5, 0.5, 0.01))

    def test_full_jacobian_matches_det(self):
        for beta in (-0.3, -0.8, -1.5, -2.4):
            g = PairGeometry(1.3, 0.7, 0.0, beta, 0.01)
            assert np.linalg.det(intersection_jacobian(g)) == pytest.approx(
                jacobian_det(g), rel=1e-9
            )

    def test_jacobian_against_finite_differences(self):
        # central differences on the intersection map itself
        def intersection(a, b, alpha, beta):
            d = math.sin(beta - alpha)
            t1 = (a * math.sin(beta) - b * math.cos(beta)) / d
            return np.array([t1 * math.cos(alpha), t1 * math.sin(alpha)])

        rng = np.random.default_rng(4)
        eps = 1e-7
        for _ in range(25):
            a, b = rng.uniform(0.5, 3.0, 2)
            alpha = rng.uniform(-0.5, 0.5)
            beta = alpha + rng.uniform(-2.5, -0.3)
            g = PairGeometry(a, b, alpha, beta, 0.01)
            jac = intersection_jacobian(g)
            fd = np.empty((2, 2))
            fd[:, 0] = (
                intersection(a, b, alpha + eps, beta)
                - intersection(a, b, alpha - eps, beta)
            ) / (2 * eps)
            fd[:, 1] = (
                intersection(a, b, alpha, beta + eps)
                - intersection(a, b, alpha, beta - eps)
            ) / (2 * eps)
            np.testing.assert_allclose(jac, fd, rtol=1e-5, atol=1e-6)

    def test_cov_analytic_shape_and_psd(self):
        cov = cov_analytic(CANONICAL)
        assert cov.shape == (2, 2)
        assert cov[0, 1] == pytest.approx(cov[1, 0])
        eig = np.linalg.eigvalsh(cov)
        assert (eig >= -1e-15).all()

    def test_cov_canonical_entries(self):
        # J = [[-2, 2], [2, 0]] so J J^T = [[8, -4], [-4, 4]]
        cov = cov_analytic(CANONICAL)
        s2 = CANONICAL.sigma**2
        np.testing.assert_allclose(cov, s2 * np.array([[8.0, -4.0], [-4.0, 4.0]]), rtol=1e-9)

    def test_cov_det_value(self):
        assert cov_det_analytic(CANONICAL) == pytest.approx(
            16.0 * CANONICAL.sigma**4, rel=1e-12
        )

    def test_sigma_scaling(self):
        g1 = PairGeometry(1.0, 1.0, 0.0, -0.7, 0.01)
        g2 = PairGeometry(1.0, 1.0, 0.0, -0.7, 0.02)
        np.testing.assert_allclose(cov_analytic(g2), 4.0 * cov_analytic(g1), rtol=1e-12)

    def test_blowup_near_parallel(self):
        near = abs(jacobian_det(PairGeometry(1, 1, 0.0, 1e-3, 0.01)))
        perp = abs(jacobian_det(PairGeometry(1, 1, 0.0, math.pi / 2, 0.01)))
        assert near > 1e6 * perp


class TestPairFrame:
    def test_canonicalizes_alpha_to_zero(self):
        g = pair_frame(Point2(3, 4), unit(1, 1), Point2(5, 2), unit(-1, 2), 0.01)
        assert g.alpha == 0.0
        assert g.sigma == 0.01

    def test_frame_preserves_intersection_distance(self):
        # |t1| in the canonical frame equals the distance from p1 to the crossing
        p1, d1 = Point2(10.0, -3.0), unit(2.0, 1.0)
        p2, d2 = Point2(18.0, 9.0), unit(-1.0, -3.0)
        c = intersect_pair(p1, d1, p2, d2, ray_check="one")
        assert c is not None
        g = pair_frame(p1, d1, p2, d2, 0.005)
        t1 = (g.a * math.sin(g.beta) - g.b * math.cos(g.beta)) / math.sin(g.beta)
        assert abs(t1) == pytest.approx(math.hypot(c.x - p1.x, c.y - p1.y), rel=1e-9)

    @given(
        st.floats(-50, 50), st.floats(-50, 50), angle,
        st.floats(-50, 50), st.floats(-50, 50), angle,
    )
    @settings(max_examples=100)
    def test_beta_wrapped(self, x1, y1, a1, x2, y2, a2):
        g = pair_frame(
            Point2(x1, y1), UnitDir(math.cos(a1), math.sin(a1)),
            Point2(x2, y2), UnitDir(math.cos(a2), math.sin(a2)), 0.01,
        )
        assert -math.pi <= g.beta <= math.pi
