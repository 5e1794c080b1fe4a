"""Robot-centered binary costmap and obstacle-group clustering."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .geometry import Pose, convex_hull


@dataclass
class CostmapConfig:
    width: float = 8.0
    resolution: float = 0.25
    inflation: float = 0.3
    leader_filter_radius: float = 0.45


@dataclass
class Costmap:
    """Square occupancy grid centered on the robot, axes world-aligned.

    cells is the raw rasterization (a cell is occupied iff at least one
    filtered scan point falls in it); inflated is the footprint-dilated grid
    used for clustering and planning, with a small disc around the robot
    cell cleared so sensor noise cannot occupy the robot's own position.
    """

    origin: Pose  # robot pose at build time
    width: float
    resolution: float
    cells: np.ndarray  # (n, n) bool, indexed [ix, iy]
    inflated: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def half(self) -> float:
        return self.width / 2.0

    def cell_of(self, rel_point: np.ndarray) -> Optional[tuple]:
        """Cell index of a robot-relative point, None when outside the map."""
        idx = np.floor((np.asarray(rel_point, dtype=float) + self.half) / self.resolution)
        if np.any(idx < 0) or np.any(idx >= self.n):
            return None
        return int(idx[0]), int(idx[1])

    def cell_center_world(self, ix: int, iy: int) -> np.ndarray:
        rel = (np.array([ix, iy], dtype=float) + 0.5) * self.resolution - self.half
        return rel + self.origin.xy

    def contains_world(self, point: np.ndarray) -> bool:
        """Chebyshev membership of a world point in the map square."""
        rel = np.asarray(point, dtype=float) - self.origin.xy
        return bool(np.max(np.abs(rel)) <= self.half)


@dataclass
class ObstacleGroup:
    """8-connected cluster of occupied cells with a convex boundary."""

    id: int
    cells: np.ndarray  # (k, 2) int cell indices
    boundary: np.ndarray  # (v, 2) CCW hull vertices, world frame
    centroid: np.ndarray  # (2,) world frame


def _disc_kernel(radius_m: float, resolution: float) -> np.ndarray:
    r_cells = int(np.floor(radius_m / resolution + 1e-9))
    if r_cells <= 0:
        return np.ones((1, 1), dtype=bool)
    span = np.arange(-r_cells, r_cells + 1)
    dx, dy = np.meshgrid(span, span, indexing="ij")
    return (dx * resolution) ** 2 + (dy * resolution) ** 2 <= radius_m**2 + 1e-9


def build_costmap(scan_rel: np.ndarray, leader_points_rel: np.ndarray,
                  config: CostmapConfig, robot_pose: Pose = None) -> Costmap:
    """Rasterize a robot-relative scan, dropping anything near the leader.

    scan_rel and leader_points_rel are points relative to the robot
    position (world-aligned axes). Leader points never mark cells: any scan
    point within leader_filter_radius of a leader point is discarded.
    """
    if robot_pose is None:
        robot_pose = Pose(0.0, 0.0, 0.0)
    n = int(round(config.width / config.resolution))
    cells = np.zeros((n, n), dtype=bool)
    pts = np.atleast_2d(np.asarray(scan_rel, dtype=float)) if len(scan_rel) else np.zeros((0, 2))
    lp = (np.atleast_2d(np.asarray(leader_points_rel, dtype=float))
          if len(leader_points_rel) else np.zeros((0, 2)))
    if len(pts) and len(lp):
        d2 = ((pts[:, None, :] - lp[None, :, :]) ** 2).sum(axis=2)
        keep = d2.min(axis=1) > config.leader_filter_radius**2
        pts = pts[keep]
    if len(pts):
        half = config.width / 2.0
        idx = np.floor((pts + half) / config.resolution).astype(int)
        ok = np.all((idx >= 0) & (idx < n), axis=1)
        idx = idx[ok]
        cells[idx[:, 0], idx[:, 1]] = True

    inflated = ndimage.binary_dilation(cells, structure=_disc_kernel(config.inflation,
                                                                     config.resolution))
    # clear the robot's own footprint so the graph never starts inside a group
    center = n // 2
    clear = _disc_kernel(config.inflation, config.resolution)
    r = clear.shape[0] // 2
    lo_x, hi_x = max(0, center - r), min(n, center + r + 1)
    lo_y, hi_y = max(0, center - r), min(n, center + r + 1)
    sub = clear[lo_x - (center - r): lo_x - (center - r) + (hi_x - lo_x),
                lo_y - (center - r): lo_y - (center - r) + (hi_y - lo_y)]
    inflated[lo_x:hi_x, lo_y:hi_y] &= ~sub
    return Costmap(origin=robot_pose.copy(), width=config.width,
                   resolution=config.resolution, cells=cells, inflated=inflated)


def cluster_groups(cmap: Costmap) -> list:
    """8-connected components of the inflated grid, as world-frame hulls.

    Group ids are stable: sorted by the scan order (top row first, then left
    to right) of each component's first cell.
    """
    labels, count = ndimage.label(cmap.inflated, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return []
    n = cmap.n
    groups = []
    order_keys = []
    for lab in range(1, count + 1):
        ix, iy = np.nonzero(labels == lab)
        # scan order: top-left first (max y row, then min x)
        key = int(np.min((n - 1 - iy) * n + ix))
        order_keys.append((key, lab, ix, iy))
    order_keys.sort()
    half = cmap.half
    res = cmap.resolution
    origin = cmap.origin.xy
    for new_id, (_, _, ix, iy) in enumerate(order_keys):
        corners_x = np.concatenate([ix, ix + 1, ix, ix + 1]) * res - half
        corners_y = np.concatenate([iy, iy, iy + 1, iy + 1]) * res - half
        corners = np.stack([corners_x, corners_y], axis=1) + origin
        hull = convex_hull(corners)
        centers = (np.stack([ix, iy], axis=1) + 0.5) * res - half + origin
        groups.append(ObstacleGroup(
            id=new_id,
            cells=np.stack([ix, iy], axis=1),
            boundary=hull,
            centroid=centers.mean(axis=0),
        ))
    return groups


def groups_from_hulls(hulls, start_id: int = 0) -> list:
    """Wrap raw hull polygons as ObstacleGroups (test and synthetic use)."""
    out = []
    for k, hull in enumerate(hulls):
        hull = convex_hull(np.asarray(hull, dtype=float))
        out.append(ObstacleGroup(
            id=start_id + k,
            cells=np.zeros((0, 2), dtype=int),
            boundary=hull,
            centroid=np.atleast_2d(hull).mean(axis=0),
        ))
    return out
