"""Geometry primitives checked against brute-force references."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from followsim import geometry as geo

# ---------- brute-force references ----------


def ref_point_segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom < 1e-18 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def ref_boundary_distance(p, verts):
    n = len(verts)
    return min(ref_point_segment_distance(p, verts[i], verts[(i + 1) % n])
               for i in range(n))


def ref_point_in_polygon(p, verts):
    # even-odd rule with a horizontal ray, written independently
    inside = False
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if (a[1] > p[1]) != (b[1] > p[1]):
            x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
            if x > p[0]:
                inside = not inside
    return inside


def ref_seg_intersect(p0, p1, q0, q1):
    # solve p0 + t (p1-p0) = q0 + u (q1-q0) and test both parameters
    d1, d2 = p1 - p0, q1 - q0
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-14:
        return False  # parallel cases are exercised separately
    rhs = q0 - p0
    t = (rhs[0] * d2[1] - rhs[1] * d2[0]) / denom
    u = (rhs[0] * d1[1] - rhs[1] * d1[0]) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


SQUARE = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]])


# ---------- angles ----------


@given(st.floats(-50.0, 50.0))
def test_wrap_angle_range_and_identity(theta):
    w = geo.wrap_angle(theta)
    assert -np.pi < w <= np.pi + 1e-12
    assert np.isclose(np.sin(w), np.sin(theta), atol=1e-9)
    assert np.isclose(np.cos(w), np.cos(theta), atol=1e-9)


@given(st.floats(-10.0, 10.0), st.floats(-10.0, 10.0))
def test_angle_diff_is_wrapped_difference(a, b):
    d = geo.angle_diff(a, b)
    assert -np.pi < d <= np.pi + 1e-12
    assert np.isclose(np.sin(d), np.sin(a - b), atol=1e-9)


def test_rot2d_is_orthonormal():
    for theta in (0.0, 0.3, -2.2, np.pi):
        r = geo.rot2d(theta)
        assert np.allclose(r @ r.T, np.eye(2), atol=1e-12)
        assert np.isclose(np.linalg.det(r), 1.0)
        assert np.allclose(r @ [1.0, 0.0], [np.cos(theta), np.sin(theta)])


def test_unit_vector():
    assert np.allclose(geo.unit(np.array([3.0, 4.0])), [0.6, 0.8])
    assert np.allclose(geo.unit(np.zeros(2)), [0.0, 0.0])


# ---------- convex hull ----------


def test_convex_hull_matches_scipy_area():
    from scipy.spatial import ConvexHull

    rng = np.random.default_rng(7)
    for _ in range(25):
        pts = rng.normal(size=(rng.integers(3, 40), 2))
        hull = geo.convex_hull(pts)
        ref = ConvexHull(pts)
        assert np.isclose(geo.polygon_area(hull), ref.volume, atol=1e-9)
        # counter-clockwise orientation and every input inside (or on) it
        assert geo.polygon_area(hull) > 0 or len(hull) < 3
        sd, _ = geo.hull_signed_distance(pts, hull)
        assert np.all(sd <= 1e-9)


def test_convex_hull_collinear_and_tiny():
    line = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    hull = geo.convex_hull(line)
    assert len(hull) >= 2
    assert geo.polygon_area(SQUARE) == pytest.approx(4.0)
    assert geo.polygon_area(SQUARE[::-1]) == pytest.approx(-4.0)


# ---------- signed distance to hulls ----------


def test_hull_signed_distance_against_reference():
    rng = np.random.default_rng(11)
    pts = rng.uniform(-2.0, 4.0, size=(300, 2))
    sd, grad = geo.hull_signed_distance(pts, SQUARE)
    for p, s, g in zip(pts, sd, grad):
        ref = ref_boundary_distance(p, SQUARE)
        sign = -1.0 if ref_point_in_polygon(p, SQUARE) else 1.0
        assert s == pytest.approx(sign * ref, abs=1e-9)
        # gradient: unit length and matches central differences away from kinks
        assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-6)
    h = 1e-6
    smooth = pts[np.abs(np.abs(sd) - 0.0) > 0.05]
    for p in smooth[:50]:
        sd0, g0 = geo.hull_signed_distance(p[None, :], SQUARE)
        fd = np.array([
            (geo.hull_signed_distance((p + [h, 0])[None, :], SQUARE)[0][0]
             - geo.hull_signed_distance((p - [h, 0])[None, :], SQUARE)[0][0]),
            (geo.hull_signed_distance((p + [0, h])[None, :], SQUARE)[0][0]
             - geo.hull_signed_distance((p - [0, h])[None, :], SQUARE)[0][0]),
        ]) / (2 * h)
        if np.linalg.norm(fd) > 0.5:  # skip kink lines of the distance field
            assert np.allclose(g0[0], fd, atol=1e-4)


def test_point_to_hull_closest_point():
    cp, d = geo.point_to_hull(np.array([3.0, 1.0]), SQUARE)
    assert np.allclose(cp, [2.0, 1.0])
    assert d == pytest.approx(1.0)
    cp, d = geo.point_to_hull(np.array([1.0, 1.0]), SQUARE)
    assert d == pytest.approx(1.0)  # boundary distance, also for inner points


def test_point_in_convex_matches_reference():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1.0, 3.0, size=(200, 2))
    got = geo.point_in_convex(pts, SQUARE)
    for p, flag in zip(pts, got):
        assert flag == ref_point_in_polygon(p, SQUARE) or \
            ref_boundary_distance(p, SQUARE) < 1e-9


def test_hulls_closest_pair():
    b = SQUARE + [5.0, 0.0]
    pa, pb, d = geo.hulls_closest(SQUARE, b)
    assert d == pytest.approx(3.0)
    assert pa[0] == pytest.approx(2.0)
    assert pb[0] == pytest.approx(5.0)


# ---------- segment predicates ----------


def test_seg_seg_intersect_matches_reference():
    rng = np.random.default_rng(23)
    for _ in range(400):
        p0, p1, q0, q1 = rng.uniform(-1.0, 1.0, size=(4, 2))
        got = geo.seg_seg_intersect(p0, p1, q0, q1)
        d1, d2 = p1 - p0, q1 - q0
        if abs(d1[0] * d2[1] - d1[1] * d2[0]) < 1e-9:
            continue
        assert got == ref_seg_intersect(p0, p1, q0, q1)


def test_seg_pairs_intersect_vectorized():
    p0 = np.array([[0.0, 0.0], [0.0, 0.0]])
    p1 = np.array([[2.0, 2.0], [1.0, 0.0]])
    q0 = np.array([[0.0, 2.0], [0.0, 1.0]])
    q1 = np.array([[2.0, 0.0], [1.0, 1.0]])
    assert list(geo.seg_pairs_intersect(p0, p1, q0, q1)) == [True, False]


def test_seg_seg_closest_between_parallel():
    t, u, cp, cq, d = geo.seg_seg_closest(
        np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    assert d == pytest.approx(1.0)
    assert cp[1] == pytest.approx(0.0)
    assert cq[1] == pytest.approx(1.0)


def test_points_to_segments_matches_scalar():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(40, 2))
    a = rng.normal(size=(15, 2))
    b = rng.normal(size=(15, 2))
    dist, _closest = geo.points_to_segments(pts, a, b)[:2] \
        if isinstance(geo.points_to_segments(pts, a, b), tuple) \
        else (geo.points_to_segments(pts, a, b), None)
    for i, p in enumerate(pts):
        for j in range(len(a)):
            assert dist[i, j] == pytest.approx(
                ref_point_segment_distance(p, a[j], b[j]), abs=1e-9)


# ---------- rays ----------


def test_rays_vs_segments_parametric_oracle():
    rng = np.random.default_rng(9)
    origin = np.zeros(2)
    angles = rng.uniform(-np.pi, np.pi, size=24)
    a = rng.uniform(-4.0, 4.0, size=(10, 2))
    b = rng.uniform(-4.0, 4.0, size=(10, 2))
    got = geo.rays_vs_segments(origin, angles, a, b)
    for k, ang in enumerate(angles):
        d = np.array([np.cos(ang), np.sin(ang)])
        best = np.inf
        for j in range(len(a)):
            e = b[j] - a[j]
            denom = d[0] * e[1] - d[1] * e[0]
            if abs(denom) < 1e-14:
                continue
            rhs = a[j] - origin
            t = (rhs[0] * e[1] - rhs[1] * e[0]) / denom
            u = (rhs[0] * d[1] - rhs[1] * d[0]) / denom
            if t >= 0.0 and 0.0 <= u <= 1.0:
                best = min(best, t)
        if np.isfinite(best) or np.isfinite(got[k]):
            assert got[k] == pytest.approx(best, abs=1e-7)


def test_rays_vs_circles_quadratic_oracle():
    origin = np.array([0.0, 0.0])
    angles = np.array([0.0, np.pi / 2, np.pi])
    centers = np.array([[3.0, 0.0]])
    radii = np.array([0.5])
    got = geo.rays_vs_circles(origin, angles, centers, radii)
    assert got[0] == pytest.approx(2.5)
    assert np.isinf(got[1]) and np.isinf(got[2])
    # ray starting inside a circle still reports the forward exit
    inside = geo.rays_vs_circles(np.array([3.0, 0.0]), np.array([0.0]),
                                 centers, radii)
    assert inside[0] == pytest.approx(0.5)


def test_segment_blocked():
    sa = np.array([[1.0, -1.0]])
    sb = np.array([[1.0, 1.0]])
    c = np.zeros((0, 2))
    r = np.zeros(0)
    assert geo.segment_blocked(np.zeros(2), np.array([2.0, 0.0]), sa, sb, c, r)
    assert not geo.segment_blocked(np.zeros(2), np.array([0.5, 0.0]), sa, sb, c, r)
    assert geo.segment_blocked(np.zeros(2), np.array([4.0, 0.0]),
                               np.zeros((0, 2)), np.zeros((0, 2)),
                               np.array([[2.0, 0.0]]), np.array([0.3]))


# ---------- polylines ----------


def test_resample_polyline_uniform_spacing():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    out = geo.resample_polyline(pts, 9)
    assert len(out) == 9
    assert np.allclose(out[0], pts[0]) and np.allclose(out[-1], pts[-1])
    steps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert np.allclose(steps, steps[0], atol=1e-9)
    assert geo.polyline_length(out) == pytest.approx(2.0)


def test_polyline_self_intersects():
    assert geo.polyline_self_intersects(
        np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0]]))
    assert not geo.polyline_self_intersects(
        np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 1.0]]))


def test_swept_angle_half_turn():
    arc = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    assert geo.swept_angle(arc, np.zeros(2)) == pytest.approx(np.pi)
    assert geo.swept_angle(arc[::-1], np.zeros(2)) == pytest.approx(-np.pi)
    assert geo.swept_angle(np.array([[1.0, 0.0], [2.0, 0.0]]),
                           np.zeros(2)) == pytest.approx(0.0)


def test_segment_crosses_hull_and_clip():
    p, q = np.array([-1.0, 1.0]), np.array([3.0, 1.0])
    assert geo.segment_crosses_hull(p, q, SQUARE)
    t0, t1 = geo.clip_segment_hull(p, q, SQUARE)
    # brute force: fraction of samples inside matches the clip window
    ts = np.linspace(0.0, 1.0, 2001)
    inside = np.array([ref_point_in_polygon(p + t * (q - p), SQUARE) for t in ts])
    assert t0 == pytest.approx(ts[inside.argmax()], abs=1e-3)
    assert t1 == pytest.approx(ts[len(ts) - 1 - inside[::-1].argmax()], abs=1e-3)
    assert not geo.segment_crosses_hull(np.array([-1.0, 5.0]),
                                        np.array([3.0, 5.0]), SQUARE)
    flags = geo.segments_cross_hull(np.array([p, [-1.0, 5.0]]),
                                    np.array([q, [3.0, 5.0]]), SQUARE)
    assert list(flags) == [True, False]
