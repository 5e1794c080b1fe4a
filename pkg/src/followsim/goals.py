"""Goal-set geometry: the trajectory endpoint slides along these during optimization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Pose, wrap_angle

TWO_PI = 2.0 * np.pi


def goal_to_dict(goal) -> dict:
    """JSON-ready summary of any goal set (for traces and rendering)."""
    if isinstance(goal, PointPoseGoal):
        return {"kind": "point", "position": goal.position.tolist(),
                "heading": goal.heading, "eps": goal.eps}
    if isinstance(goal, LineSetGoal):
        return {"kind": "line", "p1": goal.p1.tolist(), "p2": goal.p2.tolist(),
                "eps": goal.eps}
    if isinstance(goal, ArcSetGoal):
        return {"kind": "arc", "center": goal.center.tolist(),
                "radius": goal.radius, "ang_from": goal.ang_from,
                "span": goal.span, "eps": goal.eps}
    raise TypeError(f"not a goal set: {type(goal).__name__}")


@dataclass
class PointPoseGoal:
    """Fixed goal pose with tolerance eps on position and heading."""

    position: np.ndarray
    heading: Optional[float] = None  # None leaves the final heading free
    eps: float = 0.2

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.heading is not None:
            self.heading = wrap_angle(float(self.heading))


@dataclass
class LineSetGoal:
    """Straight goal segment; the endpoint may slide anywhere along it."""

    p1: np.ndarray
    p2: np.ndarray
    eps: float = 0.2

    def __post_init__(self):
        self.p1 = np.asarray(self.p1, dtype=float)
        self.p2 = np.asarray(self.p2, dtype=float)
        if np.linalg.norm(self.p2 - self.p1) < 1e-9:
            raise ValueError("LineSet endpoints must be distinct")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p2 - self.p1))


@dataclass
class ArcSetGoal:
    """Circular arc around the leader, with a facing constraint at the goal.

    The arc spans counterclockwise from ang_from over span radians; a full
    circle is span = 2*pi.
    """

    center: np.ndarray
    radius: float
    ang_from: float
    span: float
    eps: float = 0.2

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("ArcSet radius must be > 0")
        self.ang_from = wrap_angle(float(self.ang_from))
        self.span = float(np.clip(self.span, 0.0, TWO_PI))

    @property
    def ang_mid(self) -> float:
        return wrap_angle(self.ang_from + 0.5 * self.span)

    def contains_angle(self, phi: float, slack: float = 1e-9) -> bool:
        rel = (phi - self.ang_from) % TWO_PI
        return rel <= self.span + slack

    def point_at(self, phi: float) -> np.ndarray:
        return self.center + self.radius * np.array([np.cos(phi), np.sin(phi)])


def goal_nearest_point(goal, point: np.ndarray) -> np.ndarray:
    """Nearest point of a goal set to a query point (graph anchor rule)."""
    p = np.asarray(point, dtype=float)
    if isinstance(goal, PointPoseGoal):
        return goal.position.copy()
    if isinstance(goal, LineSetGoal):
        d = goal.p2 - goal.p1
        t = float(np.clip((p - goal.p1) @ d / (d @ d), 0.0, 1.0))
        return goal.p1 + t * d
    if isinstance(goal, ArcSetGoal):
        phi = float(np.arctan2(p[1] - goal.center[1], p[0] - goal.center[0]))
        if goal.contains_angle(phi):
            return goal.point_at(phi)
        rel = (phi - goal.ang_from) % TWO_PI
        # outside the arc: snap to whichever endpoint is angularly closer
        d_from = min(TWO_PI - rel, rel)  # rel > span here
        d_to = min(rel - goal.span, TWO_PI - (rel - goal.span))
        return goal.point_at(goal.ang_from if d_from <= d_to else goal.ang_from + goal.span)
    raise TypeError(f"unknown goal type {type(goal)!r}")


def goal_reference_pose(goal) -> Pose:
    """Representative pose for rendering and fallbacks."""
    if isinstance(goal, PointPoseGoal):
        return Pose(goal.position[0], goal.position[1], goal.heading or 0.0)
    if isinstance(goal, LineSetGoal):
        mid = 0.5 * (goal.p1 + goal.p2)
        return Pose(mid[0], mid[1], 0.0)
    if isinstance(goal, ArcSetGoal):
        q = goal.point_at(goal.ang_mid)
        to_center = goal.center - q
        return Pose(q[0], q[1], float(np.arctan2(to_center[1], to_center[0])))
    raise TypeError(f"unknown goal type {type(goal)!r}")
