"""Planar geometry primitives shared by the simulator and the planner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


# ---------- angles ----------

def wrap_angle(theta):
    """Normalize an angle (scalar or array) into (-pi, pi]."""
    wrapped = -((-np.asarray(theta, dtype=float) + np.pi) % TWO_PI - np.pi)
    if np.ndim(theta) == 0:
        return float(wrapped)
    return wrapped


def angle_diff(a, b):
    """Smallest signed difference a - b, in (-pi, pi]."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def rot2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        return np.zeros_like(np.asarray(v, dtype=float))
    return np.asarray(v, dtype=float) / n


def cross2(a, b):
    """z component of the 2D cross product; broadcasts over (..., 2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


# ---------- pose ----------

@dataclass
class Pose:
    """Planar pose; heading is kept normalized in (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        self.x = float(self.x)
        self.y = float(self.y)
        self.theta = wrap_angle(float(self.theta))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def copy(self) -> "Pose":
        return Pose(self.x, self.y, self.theta)


# ---------- hulls and polygons ----------

def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull via monotone chain; vertices counterclockwise.

    Degenerate inputs (all points collinear, or fewer than 3 distinct
    points) return the distinct extreme points, so callers must cope with
    1- and 2-vertex hulls.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def build(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and cross2(out[-1] - out[-2], p - out[-2]) <= 1e-12:
                out.pop()
            out.append(p)
        return out

    lower = build(pts)
    upper = build(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        # collinear input collapses to its two extremes
        return np.array([pts[0], pts[-1]])
    return hull


def polygon_area(verts: np.ndarray) -> float:
    """Signed area; positive for counterclockwise vertex order."""
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_edges(verts: np.ndarray):
    """Edge endpoint arrays (a, b), each (K, 2), for a closed polygon."""
    v = np.asarray(verts, dtype=float)
    return v, np.concatenate([v[1:], v[:1]], axis=0)


def point_in_convex(points: np.ndarray, hull: np.ndarray) -> np.ndarray:
    """Boolean mask: points inside (or on) a CCW convex hull."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(hull) == 1:
        return np.all(np.abs(pts - hull[0]) < 1e-12, axis=1)
    if len(hull) == 2:
        return np.zeros(len(pts), dtype=bool)
    a, b = polygon_edges(hull)
    # interior lies to the left of every CCW edge
    side = cross2((b - a)[None, :, :], pts[:, None, :] - a[None, :, :])
    return np.all(side >= -1e-12, axis=1)


def point_in_polygon(point: np.ndarray, verts: np.ndarray) -> bool:
    """Even-odd rule membership test for a simple polygon."""
    p = np.asarray(point, dtype=float)
    v = np.asarray(verts, dtype=float)
    x, y = p
    vx, vy = v[:, 0], v[:, 1]
    wx, wy = np.roll(vx, -1), np.roll(vy, -1)
    straddle = (vy > y) != (wy > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = vx + (y - vy) * (wx - vx) / (wy - vy)
    hits = straddle & (x < x_cross)
    return bool(np.sum(hits) % 2 == 1)


def points_to_segments(points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray):
    """Closest points from each point to each segment.

    Returns (dist, closest) with shapes (N, M) and (N, M, 2).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.atleast_2d(np.asarray(seg_a, dtype=float))
    b = np.atleast_2d(np.asarray(seg_b, dtype=float))
    d = b - a  # (M, 2)
    dd = np.einsum("ij,ij->i", d, d)  # (M,)
    degenerate = dd < 1e-18
    ap = pts[:, None, :] - a[None, :, :]  # (N, M, 2)
    t = np.einsum("nmj,mj->nm", ap, d) / np.where(degenerate, 1.0, dd)[None, :]
    t = np.where(degenerate[None, :], 0.0, np.clip(t, 0.0, 1.0))
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    diff = pts[:, None, :] - closest
    dist = np.sqrt(np.einsum("nmj,nmj->nm", diff, diff))
    return dist, closest


def hull_signed_distance(points: np.ndarray, hull: np.ndarray):
    """Signed distance to a convex hull: positive outside, negative inside.

    Returns (sd, grad) with shapes (N,) and (N, 2); grad points in the
    direction of increasing sd (outward). 1- and 2-vertex hulls are treated
    as point/segment obstacles (never "inside").
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    hull = np.asarray(hull, dtype=float)
    if len(hull) == 1:
        diff = pts - hull[0]
        dist = np.linalg.norm(diff, axis=1)
        grad = np.where(dist[:, None] > 1e-12, diff / np.maximum(dist, 1e-12)[:, None], 0.0)
        return dist, grad
    if len(hull) == 2:
        dist, closest = points_to_segments(pts, hull[:1], hull[1:2])
        dist = dist[:, 0]
        diff = pts - closest[:, 0]
        grad = np.where(dist[:, None] > 1e-12, diff / np.maximum(dist, 1e-12)[:, None], 0.0)
        return dist, grad
    a, b = polygon_edges(hull)
    dist, closest = points_to_segments(pts, a, b)
    k = np.argmin(dist, axis=1)
    idx = np.arange(len(pts))
    d = dist[idx, k]
    q = closest[idx, k]
    inside = point_in_convex(pts, hull)
    sd = np.where(inside, -d, d)
    diff = np.where(inside[:, None], q - pts, pts - q)
    grad = np.where(d[:, None] > 1e-12, diff / np.maximum(d, 1e-12)[:, None], 0.0)
    return sd, grad


def clip_segment_hull(p: np.ndarray, q: np.ndarray, hull: np.ndarray):
    """Parameter interval (t0, t1) of segment p->q inside a CCW convex hull.

    Returns None when the segment misses the hull. Degenerate hulls (< 3
    vertices) never produce an interior interval.
    """
    if len(hull) < 3:
        return None
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, b = polygon_edges(hull)
    edge = b - a
    normal = np.stack([-edge[:, 1], edge[:, 0]], axis=1)  # inward for CCW
    d = q - p
    denom = normal @ d
    num = np.einsum("ij,ij->i", normal, p - a)
    t0, t1 = 0.0, 1.0
    for k in range(len(hull)):
        de, nu = denom[k], num[k]
        if abs(de) < 1e-15:
            if nu < -1e-12:
                return None
            continue
        t = -nu / de
        if de > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return t0, t1


def segment_crosses_hull(p: np.ndarray, q: np.ndarray, hull: np.ndarray) -> bool:
    """True when segment p->q passes through the hull interior.

    Touching the boundary (shared endpoints, edges lying on the hull) does
    not count; only a strictly interior crossing does.
    """
    interval = clip_segment_hull(p, q, hull)
    if interval is None:
        return False
    t0, t1 = interval
    if t1 - t0 <= 1e-9:
        return False
    mid = np.asarray(p) + 0.5 * (t0 + t1) * (np.asarray(q) - np.asarray(p))
    sd, _ = hull_signed_distance(mid[None, :], hull)
    return bool(sd[0] < -1e-9)


def segments_cross_hull(p: np.ndarray, q: np.ndarray, hull: np.ndarray) -> np.ndarray:
    """Vectorized segment_crosses_hull over paired (S, 2) endpoint arrays."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    hull = np.asarray(hull, dtype=float)
    if len(hull) < 3:
        return np.zeros(len(p), dtype=bool)
    a, b = polygon_edges(hull)
    e = b - a
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)  # outward for CCW hulls
    n = n / np.maximum(np.linalg.norm(n, axis=1), 1e-18)[:, None]
    d = q - p  # (S, 2)
    den = d @ n.T  # (S, E)
    num = np.einsum("ej,sej->se", n, a[None, :, :] - p[:, None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = num / den
    t0 = np.where(den < -1e-18, tt, -np.inf).max(axis=1)
    t1 = np.where(den > 1e-18, tt, np.inf).min(axis=1)
    # parallel outside an edge's half plane: no interior interval at all
    parallel_out = np.any((np.abs(den) <= 1e-18) & (num < 0.0), axis=1)
    t0 = np.maximum(t0, 0.0)
    t1 = np.minimum(t1, 1.0)
    ok = (~parallel_out) & (t1 - t0 > 1e-9)
    mid = p + 0.5 * (t0 + t1)[:, None] * d
    depth = np.einsum("ej,sej->se", n, mid[:, None, :] - a[None, :, :])
    inside = np.all(depth < -1e-9, axis=1)
    return ok & inside


# ---------- segments ----------

def _orient(a, b, c):
    return cross2(np.asarray(b) - np.asarray(a), np.asarray(c) - np.asarray(a))


def seg_seg_intersect(p0, p1, q0, q1, eps: float = 1e-12) -> bool:
    """Segment intersection test, collinear overlap included."""
    d1 = _orient(q0, q1, p0)
    d2 = _orient(q0, q1, p1)
    d3 = _orient(p0, p1, q0)
    d4 = _orient(p0, p1, q1)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True

    def on_seg(a, b, c):
        if abs(_orient(a, b, c)) > eps:
            return False
        lo = np.minimum(a, b) - eps
        hi = np.maximum(a, b) + eps
        return bool(np.all(c >= lo) and np.all(c <= hi))

    return (
        on_seg(q0, q1, p0)
        or on_seg(q0, q1, p1)
        or on_seg(p0, p1, q0)
        or on_seg(p0, p1, q1)
    )


def seg_seg_closest(p0, p1, q0, q1):
    """Closest points between two segments: (s, t, pa, pb, dist)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a < 1e-18 and e < 1e-18:
        s = t = 0.0
    elif a < 1e-18:
        s = 0.0
        t = float(np.clip(f / e, 0.0, 1.0))
    else:
        c = d1 @ r
        if e < 1e-18:
            t = 0.0
            s = float(np.clip(-c / a, 0.0, 1.0))
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = float(np.clip((b * f - c * e) / denom, 0.0, 1.0)) if denom > 1e-18 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = float(np.clip(-c / a, 0.0, 1.0))
            elif t > 1.0:
                t = 1.0
                s = float(np.clip((b - c) / a, 0.0, 1.0))
    pa = p0 + s * d1
    pb = q0 + t * d2
    return s, t, pa, pb, float(np.linalg.norm(pa - pb))


def hulls_closest(hull_a: np.ndarray, hull_b: np.ndarray):
    """Shortest segment between two hull boundaries: (pa, pb, dist)."""
    a0, a1 = (hull_a, hull_a) if len(hull_a) == 1 else polygon_edges(hull_a)
    b0, b1 = (hull_b, hull_b) if len(hull_b) == 1 else polygon_edges(hull_b)
    if len(hull_a) == 2:
        a0, a1 = hull_a[:1], hull_a[1:2]
    if len(hull_b) == 2:
        b0, b1 = hull_b[:1], hull_b[1:2]
    best = (None, None, np.inf)
    for i in range(len(a0)):
        for j in range(len(b0)):
            _, _, pa, pb, d = seg_seg_closest(a0[i], a1[i], b0[j], b1[j])
            if d < best[2]:
                best = (pa, pb, d)
    return best


def point_to_hull(point: np.ndarray, hull: np.ndarray):
    """Closest boundary point of a hull to a point: (q, dist)."""
    pts = np.asarray(point, dtype=float)[None, :]
    if len(hull) == 1:
        return hull[0].copy(), float(np.linalg.norm(pts[0] - hull[0]))
    if len(hull) == 2:
        dist, closest = points_to_segments(pts, hull[:1], hull[1:2])
        return closest[0, 0], float(dist[0, 0])
    a, b = polygon_edges(hull)
    dist, closest = points_to_segments(pts, a, b)
    k = int(np.argmin(dist[0]))
    return closest[0, k], float(dist[0, k])


# ---------- ray casting ----------

def rays_vs_segments(origin, angles, seg_a, seg_b):
    """First-hit distance per ray against a segment soup.

    Returns (R,) distances, inf where a ray misses everything.
    """
    origin = np.asarray(origin, dtype=float)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    out = np.full(len(angles), np.inf)
    a = np.atleast_2d(np.asarray(seg_a, dtype=float))
    if a.shape[0] == 0:
        return out
    b = np.atleast_2d(np.asarray(seg_b, dtype=float))
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (R, 2)
    e = b - a  # (M, 2)
    ao = a - origin  # (M, 2)
    denom = cross2(d[:, None, :], e[None, :, :])  # (R, M)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross2(ao[None, :, :], e[None, :, :]) / denom
        s = cross2(ao[None, :, :], d[:, None, :]) / denom
    valid = (np.abs(denom) > 1e-15) & (t >= 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    t = np.where(valid, t, np.inf)
    return np.minimum(out, t.min(axis=1))


def rays_vs_circles(origin, angles, centers, radii):
    """First-hit distance per ray against discs; inf where missed."""
    origin = np.asarray(origin, dtype=float)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    out = np.full(len(angles), np.inf)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        return out
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (R, 2)
    oc = centers - origin  # (M, 2)
    proj = d @ oc.T  # (R, M)
    perp2 = np.einsum("ij,ij->i", oc, oc)[None, :] - proj**2
    disc = radii[None, :] ** 2 - perp2
    ok = disc >= 0.0
    root = np.sqrt(np.where(ok, disc, 0.0))
    t1 = proj - root
    t2 = proj + root
    t = np.where(t1 >= 0.0, t1, np.where(t2 >= 0.0, t2, np.inf))
    t = np.where(ok, t, np.inf)
    return np.minimum(out, t.min(axis=1))


def seg_pairs_intersect(p0, p1, q0, q1, eps: float = 1e-12) -> np.ndarray:
    """Vectorized seg_seg_intersect over paired (K, 2) endpoint arrays."""
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    q0 = np.atleast_2d(np.asarray(q0, dtype=float))
    q1 = np.atleast_2d(np.asarray(q1, dtype=float))
    u = q1 - q0
    v = p1 - p0
    d1 = u[:, 0] * (p0[:, 1] - q0[:, 1]) - u[:, 1] * (p0[:, 0] - q0[:, 0])
    d2 = u[:, 0] * (p1[:, 1] - q0[:, 1]) - u[:, 1] * (p1[:, 0] - q0[:, 0])
    d3 = v[:, 0] * (q0[:, 1] - p0[:, 1]) - v[:, 1] * (q0[:, 0] - p0[:, 0])
    d4 = v[:, 0] * (q1[:, 1] - p0[:, 1]) - v[:, 1] * (q1[:, 0] - p0[:, 0])
    proper = (((d1 > eps) & (d2 < -eps)) | ((d1 < -eps) & (d2 > eps))) & (
        ((d3 > eps) & (d4 < -eps)) | ((d3 < -eps) & (d4 > eps)))

    def on(a, b, c, d):
        lo = np.minimum(a, b) - eps
        hi = np.maximum(a, b) + eps
        return (np.abs(d) <= eps) & np.all((c >= lo) & (c <= hi), axis=1)

    touch = (on(q0, q1, p0, d1) | on(q0, q1, p1, d2)
             | on(p0, p1, q0, d3) | on(p0, p1, q1, d4))
    return proper | touch


def segment_blocked(p, q, seg_a, seg_b, centers, radii) -> bool:
    """True when segment p->q hits any of the given segments or discs."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a = np.atleast_2d(np.asarray(seg_a, dtype=float)) if len(seg_a) else np.zeros((0, 2))
    if a.shape[0]:
        b = np.atleast_2d(np.asarray(seg_b, dtype=float))
        hit = seg_pairs_intersect(np.broadcast_to(p, a.shape),
                                  np.broadcast_to(q, a.shape), a, b)
        if bool(np.any(hit)):
            return True
    centers = np.atleast_2d(np.asarray(centers, dtype=float)) if len(centers) else np.zeros((0, 2))
    if centers.shape[0]:
        dist, _ = points_to_segments(centers, p[None, :], q[None, :])
        if np.any(dist[:, 0] < np.asarray(radii, dtype=float)):
            return True
    return False


# ---------- polylines ----------

def polyline_length(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def resample_polyline(pts: np.ndarray, n: int) -> np.ndarray:
    """Resample a polyline to n points, evenly spaced by arclength."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 1:
        return np.repeat(pts, n, axis=0)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total < 1e-12:
        return np.repeat(pts[:1], n, axis=0)
    targets = np.linspace(0.0, total, n)
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    return np.stack([x, y], axis=1)


def swept_angle(pts: np.ndarray, center: np.ndarray) -> float:
    """Total signed angle swept by (center -> point) along a polyline."""
    rel = np.asarray(pts, dtype=float) - np.asarray(center, dtype=float)
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    return float(np.sum(wrap_angle(np.diff(ang))))


def polyline_self_intersects(pts: np.ndarray) -> bool:
    """True when any two non-adjacent segments of the polyline touch."""
    pts = np.asarray(pts, dtype=float)
    m = len(pts) - 1
    if m < 3:
        return False
    ii, jj = np.triu_indices(m, k=2)
    if np.linalg.norm(pts[0] - pts[-1]) < 1e-12:
        keep = ~((ii == 0) & (jj == m - 1))  # closed endpoints meet by design
        ii, jj = ii[keep], jj[keep]
    if len(ii) == 0:
        return False
    hit = seg_pairs_intersect(pts[ii], pts[ii + 1], pts[jj], pts[jj + 1])
    return bool(np.any(hit))
