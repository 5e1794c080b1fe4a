"""Deterministic 2D world: obstacles, scripted leaders, and the visibility sensor."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NoVisibleLeader
from .geometry import (
    Pose,
    angle_diff,
    point_in_polygon,
    points_to_segments,
    polygon_area,
    rays_vs_circles,
    rays_vs_segments,
    segment_blocked,
    wrap_angle,
)

LEADER_OUTLINE_SAMPLES = 16


# ---------- domain types ----------

@dataclass
class Obstacle:
    """Static, dynamic, or overflyable obstacle; polygon or disc shaped.

    Overflyable obstacles block the follower but not a flying leader, and
    being short they do not occlude the sensor's view of the leader.
    """

    kind: str = "static"  # static | dynamic | overflyable
    vertices: Optional[np.ndarray] = None  # CCW polygon, world frame
    center: Optional[np.ndarray] = None  # disc center
    radius: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    resample_period: float = 3.0
    speed_band: tuple = (0.2, 1.0)

    def __post_init__(self):
        if self.kind not in ("static", "dynamic", "overflyable"):
            raise ValueError(f"unknown obstacle kind {self.kind!r}")
        if self.vertices is not None:
            self.vertices = np.asarray(self.vertices, dtype=float)
            if polygon_area(self.vertices) < 0:
                self.vertices = self.vertices[::-1].copy()
        elif self.center is not None:
            self.center = np.asarray(self.center, dtype=float)
            if self.radius <= 0:
                raise ValueError("disc radius must be > 0")
        else:
            raise ValueError("obstacle needs vertices or center+radius")
        self.velocity = np.asarray(self.velocity, dtype=float)

    @property
    def is_disc(self) -> bool:
        return self.center is not None

    def segments(self):
        v = self.vertices
        return v, np.roll(v, -1, axis=0)


@dataclass
class LeaderScript:
    """Replayed leader trajectory: waypoint times must strictly increase."""

    waypoints: Sequence[tuple]  # (time, Pose)
    identity: str = "leader"
    appearance_seed: int = 0
    flies_over: bool = False

    def __post_init__(self):
        times = [float(t) for t, _ in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        self._times = np.array(times)
        self._poses = [p if isinstance(p, Pose) else Pose(*p) for _, p in self.waypoints]

    @property
    def end_time(self) -> float:
        return float(self._times[-1])

    def pose_at(self, t: float) -> Pose:
        """Script pose at time t: linear interpolation between waypoints."""
        times = self._times
        if t <= times[0]:
            return self._poses[0].copy()
        if t >= times[-1]:
            return self._poses[-1].copy()
        k = int(np.searchsorted(times, t, side="right")) - 1
        a, b = self._poses[k], self._poses[k + 1]
        u = (t - times[k]) / (times[k + 1] - times[k])
        theta = a.theta + u * angle_diff(b.theta, a.theta)
        return Pose(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), theta)


@dataclass
class RobotModel:
    v_max_physical: float = 1.5
    omega_max: float = 2.5
    a_max: float = 2.0
    footprint_radius: float = 0.3

    def __post_init__(self):
        for name in ("v_max_physical", "omega_max", "a_max", "footprint_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class SensorModel:
    fov_half_angle: float = 1.3
    range: float = 10.0
    ray_count: int = 180
    scan_noise_sigma: float = 0.01

    def __post_init__(self):
        if not (0 < self.fov_half_angle <= np.pi):
            raise ValueError("fov_half_angle must be in (0, pi]")
        if self.range <= 0:
            raise ValueError("range must be > 0")


@dataclass
class LeaderObservation:
    visible: bool
    visible_fraction: float
    in_fov: bool
    point_set: np.ndarray  # (K, 2) unoccluded outline samples, world frame
    occluder_id: Optional[int] = None


# ---------- world ----------

@dataclass
class World:
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    obstacles: list = field(default_factory=list)
    leaders: list = field(default_factory=list)  # LeaderScript entries
    active_leader: int = 0
    leader_radius: float = 0.3
    seed: int = 0
    t: float = 0.0

    def __post_init__(self):
        root = np.random.SeedSequence(self.seed)
        children = root.spawn(len(self.obstacles) + 1)
        self._sensor_rng = np.random.default_rng(children[0])
        self._obstacle_rngs = [np.random.default_rng(c) for c in children[1:]]
        self._next_resample = [
            ob.resample_period if ob.kind == "dynamic" else np.inf for ob in self.obstacles
        ]

    # -- queries --

    def leader_script(self) -> LeaderScript:
        return self.leaders[self.active_leader]

    def leader_pose(self) -> Pose:
        return self.leader_script().pose_at(self.t)

    def dynamic_obstacle_states(self):
        """Ground-truth (center, velocity, radius) for every dynamic disc."""
        out = []
        for ob in self.obstacles:
            if ob.kind == "dynamic" and ob.is_disc:
                out.append((ob.center.copy(), ob.velocity.copy(), ob.radius))
        return out

    def _occlusion_geometry(self):
        """Segments and discs that occlude the sensor (overflyables are short)."""
        seg_a, seg_b, centers, radii = [], [], [], []
        occ_index = []
        for idx, ob in enumerate(self.obstacles):
            if ob.kind == "overflyable":
                continue
            if ob.is_disc:
                centers.append(ob.center)
                radii.append(ob.radius)
                occ_index.append(("disc", idx))
            else:
                a, b = ob.segments()
                seg_a.append(a)
                seg_b.append(b)
                occ_index.append(("poly", idx, len(a)))
        seg_a = np.concatenate(seg_a) if seg_a else np.zeros((0, 2))
        seg_b = np.concatenate(seg_b) if seg_b else np.zeros((0, 2))
        centers = np.array(centers) if centers else np.zeros((0, 2))
        radii = np.array(radii) if radii else np.zeros(0)
        return seg_a, seg_b, centers, radii

    def _scan_geometry(self):
        """Everything the range sensor returns hits from (leader excluded)."""
        seg_a, seg_b, centers, radii = [], [], [], []
        for ob in self.obstacles:
            if ob.is_disc:
                centers.append(ob.center)
                radii.append(ob.radius)
            else:
                a, b = ob.segments()
                seg_a.append(a)
                seg_b.append(b)
        seg_a = np.concatenate(seg_a) if seg_a else np.zeros((0, 2))
        seg_b = np.concatenate(seg_b) if seg_b else np.zeros((0, 2))
        centers = np.array(centers) if centers else np.zeros((0, 2))
        radii = np.array(radii) if radii else np.zeros(0)
        return seg_a, seg_b, centers, radii

    def check_collision(self, point: np.ndarray, radius: float, flying: bool = False) -> bool:
        """Footprint-disc collision against obstacles.

        flying=True skips overflyable obstacles (leader with flies_over).
        """
        p = np.asarray(point, dtype=float)
        for ob in self.obstacles:
            if flying and ob.kind == "overflyable":
                continue
            if ob.is_disc:
                if np.linalg.norm(p - ob.center) < radius + ob.radius:
                    return True
            else:
                a, b = ob.segments()
                dist, _ = points_to_segments(p[None, :], a, b)
                if dist.min() < radius:
                    return True
                if point_in_polygon(p, ob.vertices):
                    return True
        return False


# ---------- operations ----------

def step_world(world: World, dt: float) -> World:
    """Advance time: leaders follow scripts, dynamic obstacles integrate.

    Each dynamic obstacle redraws its velocity from its own seeded generator
    every resample_period seconds (uniform direction, speed in speed_band).
    Obstacle centers are clamped to the arena; a clamped axis reflects its
    velocity component so discs do not stick to walls.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    xmin, ymin, xmax, ymax = world.bounds
    t_new = world.t + dt
    for i, ob in enumerate(world.obstacles):
        if ob.kind != "dynamic" or not ob.is_disc:
            continue
        ob.center = ob.center + ob.velocity * dt
        lo = np.array([xmin + ob.radius, ymin + ob.radius])
        hi = np.array([xmax - ob.radius, ymax - ob.radius])
        clamped = np.clip(ob.center, lo, hi)
        bounced = clamped != ob.center
        ob.velocity = np.where(bounced, -ob.velocity, ob.velocity)
        ob.center = clamped
        while t_new >= world._next_resample[i] - 1e-12:
            rng = world._obstacle_rngs[i]
            ang = rng.uniform(0.0, 2.0 * np.pi)
            speed = rng.uniform(*ob.speed_band)
            ob.velocity = speed * np.array([np.cos(ang), np.sin(ang)])
            world._next_resample[i] += ob.resample_period
    world.t = t_new
    return world


def leader_outline(center: np.ndarray, radius: float) -> np.ndarray:
    """Fixed boundary sample points used for the visibility fraction."""
    ang = np.linspace(0.0, 2.0 * np.pi, LEADER_OUTLINE_SAMPLES, endpoint=False)
    return center[None, :] + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def sense(world: World, robot_pose: Pose, sensor: SensorModel):
    """Cast the sensor: (scan points, LeaderObservation).

    Scan points are first ray hits within the FOV cone and range, with
    Gaussian range noise; rays that hit the leader body are removed from the
    scan, and the leader is instead reported through the observation's
    point_set (the unoccluded outline samples).
    """
    origin = robot_pose.xy
    angles = robot_pose.theta + np.linspace(
        -sensor.fov_half_angle, sensor.fov_half_angle, sensor.ray_count
    )
    seg_a, seg_b, centers, radii = world._scan_geometry()
    t_obs = np.minimum(
        rays_vs_segments(origin, angles, seg_a, seg_b),
        rays_vs_circles(origin, angles, centers, radii),
    )
    leader_pose = world.leader_pose()
    t_leader = rays_vs_circles(origin, angles, leader_pose.xy[None, :], [world.leader_radius])
    hit_leader = t_leader < t_obs
    dist = np.where(hit_leader, np.inf, t_obs)
    in_range = dist <= sensor.range
    if sensor.scan_noise_sigma > 0:
        noise = world._sensor_rng.normal(0.0, sensor.scan_noise_sigma, size=len(angles))
    else:
        noise = np.zeros(len(angles))
    dist_noisy = np.where(in_range, np.maximum(dist + noise, 0.0), np.inf)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    scan = origin[None, :] + dist_noisy[in_range, None] * dirs[in_range]

    # leader observation from outline samples
    rel = leader_pose.xy - origin
    leader_dist = float(np.linalg.norm(rel))
    bearing = float(np.arctan2(rel[1], rel[0]))
    in_fov = (
        abs(angle_diff(bearing, robot_pose.theta)) <= sensor.fov_half_angle
        and leader_dist <= sensor.range
    )
    samples = leader_outline(leader_pose.xy, world.leader_radius)
    occ_a, occ_b, occ_c, occ_r = world._occlusion_geometry()
    visible_mask = np.zeros(LEADER_OUTLINE_SAMPLES, dtype=bool)
    blocker_votes: dict[int, int] = {}
    if in_fov:
        for k, s in enumerate(samples):
            srel = s - origin
            if np.linalg.norm(srel) > sensor.range:
                continue
            if abs(angle_diff(np.arctan2(srel[1], srel[0]), robot_pose.theta)) > sensor.fov_half_angle:
                continue
            if segment_blocked(origin, s, occ_a, occ_b, occ_c, occ_r):
                blocker = _nearest_blocker(world, origin, s)
                if blocker is not None:
                    blocker_votes[blocker] = blocker_votes.get(blocker, 0) + 1
                continue
            visible_mask[k] = True
    fraction = float(visible_mask.sum()) / LEADER_OUTLINE_SAMPLES
    visible = bool(in_fov and visible_mask.any())
    occluder = max(blocker_votes, key=blocker_votes.get) if blocker_votes else None
    obs = LeaderObservation(
        visible=visible,
        visible_fraction=fraction if in_fov else 0.0,
        in_fov=bool(in_fov),
        point_set=samples[visible_mask] if visible else np.zeros((0, 2)),
        occluder_id=occluder,
    )
    return scan, obs


def _nearest_blocker(world: World, origin: np.ndarray, target: np.ndarray) -> Optional[int]:
    """Index of the occluding obstacle closest to the sensor on a ray."""
    rel = target - origin
    d = float(np.linalg.norm(rel))
    if d < 1e-12:
        return None
    ang = np.array([np.arctan2(rel[1], rel[0])])
    best = (np.inf, None)
    for idx, ob in enumerate(world.obstacles):
        if ob.kind == "overflyable":
            continue
        if ob.is_disc:
            t = rays_vs_circles(origin, ang, ob.center[None, :], [ob.radius])[0]
        else:
            a, b = ob.segments()
            t = rays_vs_segments(origin, ang, a, b)[0]
        if t < d - 1e-9 and t < best[0]:
            best = (t, idx)
    return best[1]


def leader_mean_state(history: Sequence[tuple], window: float):
    """Mean leader position and finite-difference velocity from observations.

    history is a sequence of (time, LeaderObservation), oldest first. The
    position is the mean of the latest visible point_set; velocity is the
    positional difference against the newest visible observation at least
    `window` seconds older (or the oldest visible one when none is).
    """
    visible = [(t, o) for t, o in history if o.visible]
    if not visible:
        raise NoVisibleLeader("no visible observation in window")
    t_now = history[-1][0]
    recent = [(t, o) for t, o in visible if t >= t_now - window - 1e-9]
    if not recent:
        raise NoVisibleLeader("no visible observation in window")
    t1, obs1 = visible[-1]
    p1 = obs1.point_set.mean(axis=0)
    older = [(t, o) for t, o in visible if t <= t1 - window + 1e-9]
    if older:
        t0, obs0 = older[-1]
    else:
        t0, obs0 = visible[0]
    if t1 - t0 < 1e-9:
        return p1, np.zeros(2)
    p0 = obs0.point_set.mean(axis=0)
    return p1, (p1 - p0) / (t1 - t0)


def interpolate_heading(theta_a: float, theta_b: float, u: float) -> float:
    """Shortest-path heading interpolation (exposed for script tooling)."""
    return wrap_angle(theta_a + u * angle_diff(theta_b, theta_a))
