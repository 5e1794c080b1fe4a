"""Follow-state machine and state-dependent goal-set construction."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .costmap import Costmap
from .errors import LeaderInsideMap, NeverSeen, NoFreeArc
from .geometry import Pose
from .goals import ArcSetGoal, LineSetGoal, PointPoseGoal


class FollowState(enum.Enum):
    FOLLOWING = "following"
    CHASING = "chasing"
    PLANNING = "planning"
    RETREATING = "retreating"
    SWITCHING = "switching"


@dataclass
class AdaptationConfig:
    alpha: float = 0.5  # edge-line length gain, also the selection discount
    alpha_nis: float = 0.3  # innovation-consistency gain for the safe distance
    d_min: float = 1.0
    d_max: float = 3.0
    alpha_speed: float = 1.0  # leader-speed term of the velocity cap
    alpha_dist: float = 0.3  # distance term of the velocity cap, per second
    eps: float = 0.2
    retreat_speed: float = 0.3  # closing speed that arms retreating
    retreat_range_factor: float = 1.5  # times the safe distance
    min_dwell: float = 0.3
    arc_min_span: float = 0.2
    arc_samples: int = 96
    max_goal_sets: int = 4
    min_line_length: float = 0.5


@dataclass
class TransitionFlags:
    identified: bool = False
    ever_identified: bool = False
    has_estimate: bool = False
    in_costmap: bool = False
    leader_approaching: bool = False
    new_leader_command: bool = False
    distance: float = np.inf


def transition(flags: TransitionFlags) -> FollowState:
    """Priority-ordered state choice; pure function of the flags."""
    if flags.new_leader_command:
        return FollowState.SWITCHING
    if not flags.identified:
        if flags.ever_identified:
            return FollowState.PLANNING
        return FollowState.CHASING
    if not flags.in_costmap:
        return FollowState.CHASING
    if flags.leader_approaching:
        return FollowState.RETREATING
    return FollowState.FOLLOWING


@dataclass
class StateMachine:
    """Debounced wrapper: transitions hold for a minimum dwell time.

    Switching bypasses the dwell in both directions so a leader handoff is
    never delayed and lasts a single decision tick.
    """

    config: AdaptationConfig = field(default_factory=AdaptationConfig)
    state: FollowState = FollowState.CHASING
    last_change: float = -np.inf

    def update(self, flags: TransitionFlags, t: float) -> FollowState:
        proposed = transition(flags)
        if proposed == self.state:
            return self.state
        exempt = (proposed == FollowState.SWITCHING
                  or self.state == FollowState.SWITCHING)
        if not exempt and t - self.last_change < self.config.min_dwell:
            return self.state
        self.state = proposed
        self.last_change = t
        return self.state


# ---------- scalar adaptations ----------

def safe_distance(nis: float, cfg: AdaptationConfig = None) -> float:
    cfg = cfg or AdaptationConfig()
    return float(np.clip(cfg.alpha_nis * nis, cfg.d_min, cfg.d_max))


def speed_cap(state: FollowState, leader_speed: float, distance: float,
              v_max: float, cfg: AdaptationConfig = None) -> float:
    """Velocity cap: adaptive near the leader, wide open when catching up."""
    cfg = cfg or AdaptationConfig()
    if state in (FollowState.FOLLOWING, FollowState.RETREATING):
        return float(np.clip(cfg.alpha_speed * leader_speed
                             + cfg.alpha_dist * distance, 0.0, v_max))
    return float(v_max)


# ---------- occupancy helpers ----------

def _occupied_world(cmap: Costmap, point: np.ndarray) -> bool:
    """Inflated-grid occupancy at a world point, clamped to the map."""
    rel = np.asarray(point, dtype=float) - cmap.origin.xy
    idx = np.floor((rel + cmap.half) / cmap.resolution).astype(int)
    idx = np.clip(idx, 0, cmap.n - 1)
    return bool(cmap.inflated[idx[0], idx[1]])


def _free_runs(mask: np.ndarray, circular: bool) -> list:
    """Maximal runs of True as (start, length) index pairs."""
    k = len(mask)
    if not np.any(mask):
        return []
    if np.all(mask):
        return [(0, k)]
    runs = []
    if circular:
        # rotate so index 0 is blocked, then unwrap linearly
        blocked = int(np.argmin(mask))
        rolled = np.roll(mask, -blocked)
        start = None
        for i in range(k + 1):
            v = rolled[i] if i < k else False
            if v and start is None:
                start = i
            elif not v and start is not None:
                runs.append(((start + blocked) % k, i - start))
                start = None
    else:
        start = None
        for i in range(k + 1):
            v = mask[i] if i < k else False
            if v and start is None:
                start = i
            elif not v and start is not None:
                runs.append((start, i - start))
                start = None
    return runs


# ---------- goal constructors ----------

def following_goal(leader_pos: np.ndarray, cmap: Costmap, d_t: float,
                   cfg: AdaptationConfig = None) -> list:
    """Arcs of free space at the safe distance around the leader.

    Samples the circle densely against the inflated grid; maximal free runs
    wider than the minimum span become ArcSet goals, widest first.
    """
    cfg = cfg or AdaptationConfig()
    center = np.asarray(leader_pos, dtype=float)
    k = cfg.arc_samples
    step = 2.0 * np.pi / k
    phis = np.arange(k) * step
    pts = center[None, :] + d_t * np.stack([np.cos(phis), np.sin(phis)], axis=1)
    free = np.array([cmap.contains_world(p) and not _occupied_world(cmap, p)
                     for p in pts])
    goals = []
    for start, length in _free_runs(free, circular=True):
        span = length * step
        if span < cfg.arc_min_span:
            continue
        if length == k:
            goals.append(ArcSetGoal(center=center, radius=d_t, ang_from=0.0,
                                    span=2.0 * np.pi, eps=cfg.eps))
        else:
            # shrink by half a sample step on each side so the arc ends
            # strictly inside free space
            ang_from = phis[start % k] + 0.5 * step
            span = max(span - step, cfg.arc_min_span)
            goals.append(ArcSetGoal(center=center, radius=d_t,
                                    ang_from=ang_from, span=span, eps=cfg.eps))
    if not goals:
        raise NoFreeArc(f"no free arc of span >= {cfg.arc_min_span} at d={d_t:.2f}")
    goals.sort(key=lambda g: -g.span)
    return goals[: cfg.max_goal_sets]


def retreating_goal(leader_pos: np.ndarray, leader_vel: np.ndarray,
                    cmap: Costmap, d_t: float,
                    cfg: AdaptationConfig = None) -> list:
    """Same arc construction, but around a short look-ahead of the leader."""
    cfg = cfg or AdaptationConfig()
    center = (np.asarray(leader_pos, dtype=float)
              + 0.5 * np.asarray(leader_vel, dtype=float))
    return following_goal(center, cmap, d_t, cfg)


def _perimeter_point(s: float, half: float) -> np.ndarray:
    """Map arclength s (counterclockwise from the bottom-right corner) to a
    point on the square of half-width half."""
    side = 2.0 * half
    s = s % (4.0 * side)
    edge = int(s // side)
    u = s - edge * side
    if edge == 0:
        return np.array([half, -half + u])
    if edge == 1:
        return np.array([half - u, half])
    if edge == 2:
        return np.array([-half, half - u])
    return np.array([-half + u, -half])


def _perimeter_param(rel: np.ndarray, half: float) -> float:
    side = 2.0 * half
    x, y = float(rel[0]), float(rel[1])
    if abs(x - half) < 1e-9:
        return y + half
    if abs(y - half) < 1e-9:
        return side + (half - x)
    if abs(x + half) < 1e-9:
        return 2.0 * side + (half - y)
    return 3.0 * side + (x + half)


def edge_line_length(distance: float, half_width: float,
                     cfg: AdaptationConfig = None) -> float:
    """Total edge-line goal length for a leader `distance` away: the line
    grows with the gap beyond the map edge and never exceeds half the
    perimeter."""
    cfg = cfg or AdaptationConfig()
    length = max(cfg.alpha * (distance - half_width), cfg.min_line_length)
    return min(length, 4.0 * half_width)


def chasing_goal(robot_pose: Pose, leader_pos: np.ndarray, cmap: Costmap,
                 cfg: AdaptationConfig = None) -> list:
    """Free line segments on the map edge facing a leader outside the map.

    The segment is centered where the robot-to-leader ray exits the square,
    has total length alpha * (dist - half-width), wraps around corners, and
    is split wherever the inflated grid blocks it.
    """
    cfg = cfg or AdaptationConfig()
    leader_pos = np.asarray(leader_pos, dtype=float)
    if cmap.contains_world(leader_pos):
        raise LeaderInsideMap("edge-line goal needs the leader outside the map")
    origin = cmap.origin.xy
    rel = leader_pos - origin
    dist = float(np.linalg.norm(rel))
    half = cmap.half
    u = rel / max(dist, 1e-9)
    t_exit = half / max(np.max(np.abs(u)), 1e-9)
    exit_rel = np.clip(t_exit * u, -half, half)
    length = edge_line_length(dist, half, cfg)

    s_mid = _perimeter_param(exit_rel, half)
    s0, s1 = s_mid - length / 2.0, s_mid + length / 2.0
    side = 2.0 * half
    # corner breakpoints inside (s0, s1)
    ks = np.arange(np.ceil(s0 / side), np.floor(s1 / side) + 1) * side
    stops = np.unique(np.concatenate([[s0], ks, [s1]]))
    stops = stops[(stops >= s0 - 1e-9) & (stops <= s1 + 1e-9)]

    goals = []
    n_sample = max(4, int(np.ceil(length / (cmap.resolution * 0.5))))
    for a, b in zip(stops[:-1], stops[1:]):
        if b - a < 1e-6:
            continue
        p1 = _perimeter_point(a, half) + origin
        p2 = _perimeter_point(b, half) + origin
        seg_samples = max(4, int(np.ceil((b - a) / length * n_sample)))
        ts = np.linspace(0.0, 1.0, seg_samples)
        pts = p1[None, :] + ts[:, None] * (p2 - p1)[None, :]
        free = np.array([not _occupied_world(cmap, p) for p in pts])
        for start, run in _free_runs(free, circular=False):
            lo, hi = ts[start], ts[start + run - 1]
            if (hi - lo) * (b - a) < cfg.min_line_length * 0.5:
                continue
            goals.append(LineSetGoal(p1=p1 + lo * (p2 - p1),
                                     p2=p1 + hi * (p2 - p1), eps=cfg.eps))
    if not goals:
        raise NoFreeArc("map edge fully blocked toward the leader")
    goals.sort(key=lambda g: -g.length)
    return goals[: cfg.max_goal_sets]


def planning_goal(last_seen_pose, cfg: AdaptationConfig = None) -> list:
    """Drive to where the leader was last seen, facing its departure heading."""
    cfg = cfg or AdaptationConfig()
    if last_seen_pose is None:
        raise NeverSeen("no recorded leader sighting")
    return [PointPoseGoal(position=np.array([last_seen_pose.x, last_seen_pose.y]),
                          heading=last_seen_pose.theta, eps=cfg.eps)]
