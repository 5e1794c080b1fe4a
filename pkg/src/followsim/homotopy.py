"""Homotopy signatures: per-obstacle detour direction, and deduplication."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometry
from .geometry import cross2, swept_angle, wrap_angle

ANGLE_MIN = 0.2  # rad; smaller total sweeps inherit the chord-side sign


def signature(points: np.ndarray, groups, angle_min: float = ANGLE_MIN) -> tuple:
    """Signature values (+1 counterclockwise, -1 clockwise) per obstacle group.

    For each group centroid the loop formed by the trajectory plus the
    straight start-to-end chord is swept; the sign of the total swept angle
    is the value. Groups whose total sweep is below angle_min are
    homotopically irrelevant and inherit the side of the chord they lie on
    (falling back to the open trajectory's own sweep when they sit exactly
    on the chord line).
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("trajectory needs at least 2 points")
    p0, pm = pts[0], pts[-1]
    values = []
    for g in groups:
        c = g.centroid
        if np.min(np.linalg.norm(pts - c[None, :], axis=1)) < 1e-9:
            raise DegenerateGeometry(f"trajectory touches centroid of group {g.id}")
        sweep = swept_angle(pts, c)
        # closing chord step pm -> p0, normalized like every other step
        ang_m = np.arctan2(pm[1] - c[1], pm[0] - c[0])
        ang_0 = np.arctan2(p0[1] - c[1], p0[0] - c[0])
        total = sweep + wrap_angle(ang_0 - ang_m)
        if abs(total) >= angle_min:
            values.append(1 if total > 0 else -1)
            continue
        side = cross2(pm - p0, c - p0)
        if abs(side) > 1e-9:
            values.append(1 if side > 0 else -1)
        else:
            # centroid on the chord line: the open sweep still has a side
            values.append(1 if sweep > 0 else -1)
    return tuple(values)


def dedup_by_signature(trajs) -> list:
    """One representative per signature, keeping the lowest seed length.

    Items must expose .signature and .seed_length; input order breaks exact
    length ties, so the operation is deterministic and idempotent.
    """
    best = {}
    order = []
    for traj in trajs:
        key = tuple(traj.signature)
        if key not in best:
            best[key] = traj
            order.append(key)
        elif traj.seed_length < best[key].seed_length - 1e-12:
            best[key] = traj
    return [best[k] for k in order]
