"""Scenario presets, procedural leader scripts, and episode config files."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .geometry import Pose, points_to_segments
from .perception import LightingField
from .world import LeaderScript, Obstacle, World

SCENARIO_NAMES = ("playground", "forest", "factory", "dynamic")
SCRIPTS_PER_SCENARIO = 10
REAPPEAR_SCRIPTS = 13
SETTLING_WINDOW = 5.0  # success is judged after the leader reaches its target


@dataclass
class Episode:
    """Everything one simulation run needs."""

    name: str
    world: World
    robot_start: Pose
    lighting: LightingField = field(default_factory=LightingField)
    duration: float = 25.0
    switch: Optional[tuple] = None  # (time, leader index)
    meta: dict = field(default_factory=dict)


# ---------- clearance helpers for script generation ----------

def _point_clear(p: np.ndarray, obstacles, clearance: float) -> bool:
    for ob in obstacles:
        if ob.is_disc:
            if np.linalg.norm(p - ob.center) < ob.radius + clearance:
                return False
        else:
            a, b = ob.segments()
            dist, _ = points_to_segments(p[None, :], a, b)
            if float(dist.min()) < clearance:
                return False
            lo = ob.vertices.min(axis=0)
            hi = ob.vertices.max(axis=0)
            if np.all(p >= lo) and np.all(p <= hi):
                return False
    return True


def _leg_clear(a: np.ndarray, b: np.ndarray, obstacles, clearance: float) -> bool:
    n = max(2, int(np.ceil(np.linalg.norm(b - a) / 0.2)))
    for u in np.linspace(0.0, 1.0, n):
        if not _point_clear(a + u * (b - a), obstacles, clearance):
            return False
    return True


def _random_walk_script(rng, start: np.ndarray, heading: float, obstacles,
                        bounds, legs: int, clearance: float = 0.75,
                        stand_first: float = 1.0) -> LeaderScript:
    """Waypoint random walk through free space with rejection sampling."""
    xmin, ymin, xmax, ymax = bounds
    margin = 1.0
    center = np.array([(xmin + xmax) / 2.0, (ymin + ymax) / 2.0])
    pts = [np.asarray(start, dtype=float)]
    ang = heading
    for _ in range(legs):
        placed = False
        for _try in range(50):
            turn = rng.uniform(-1.1, 1.1)
            step = rng.uniform(1.8, 3.2)
            cand_ang = ang + turn
            cand = pts[-1] + step * np.array([np.cos(cand_ang), np.sin(cand_ang)])
            inside = (xmin + margin <= cand[0] <= xmax - margin
                      and ymin + margin <= cand[1] <= ymax - margin)
            if inside and _leg_clear(pts[-1], cand, obstacles, clearance):
                pts.append(cand)
                ang = cand_ang
                placed = True
                break
        if not placed:
            # steer back toward the arena center
            to_c = center - pts[-1]
            cand = pts[-1] + 2.0 * to_c / max(np.linalg.norm(to_c), 1e-9)
            if _leg_clear(pts[-1], cand, obstacles, clearance):
                pts.append(cand)
                ang = float(np.arctan2(to_c[1], to_c[0]))
    waypoints = []
    t = 0.0
    headings = []
    for i in range(len(pts)):
        if i + 1 < len(pts):
            d = pts[i + 1] - pts[i]
            headings.append(float(np.arctan2(d[1], d[0])))
        else:
            headings.append(headings[-1] if headings else 0.0)
    waypoints.append((0.0, Pose(pts[0][0], pts[0][1], headings[0])))
    if stand_first > 0:
        t = stand_first
        waypoints.append((t, Pose(pts[0][0], pts[0][1], headings[0])))
    for i in range(1, len(pts)):
        speed = rng.uniform(0.65, 1.05)
        t += float(np.linalg.norm(pts[i] - pts[i - 1])) / speed
        waypoints.append((t, Pose(pts[i][0], pts[i][1], headings[i])))
    # stand at the end so settling has something to settle to
    waypoints.append((t + 2.5, waypoints[-1][1]))
    return LeaderScript(waypoints=waypoints)


def _rect(x0: float, y0: float, x1: float, y1: float, kind: str = "static") -> Obstacle:
    return Obstacle(kind=kind, vertices=np.array(
        [[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float))


# ---------- the four metric-suite scenarios ----------

def _playground_obstacles():
    return [
        _rect(5.5, 2.0, 7.0, 3.0),
        _rect(8.0, -3.5, 9.5, -2.5),
        Obstacle(kind="static", center=np.array([4.0, -3.0]), radius=0.5),
        Obstacle(kind="static", center=np.array([10.5, 1.5]), radius=0.6),
    ]


def _forest_obstacles():
    rng = np.random.default_rng(np.random.SeedSequence([7, 1]))
    centers = []
    while len(centers) < 14:
        c = np.array([rng.uniform(3.0, 15.0), rng.uniform(-6.0, 6.0)])
        if all(np.linalg.norm(c - o) > 2.4 for o in centers):
            centers.append(c)
    return [Obstacle(kind="static", center=c, radius=float(r))
            for c, r in zip(centers, rng.uniform(0.35, 0.5, size=len(centers)))]


def _factory_obstacles():
    shelves = [
        _rect(3.0, 2.2, 8.0, 2.8),
        _rect(3.0, -0.3, 8.0, 0.3),
        _rect(3.0, -2.8, 8.0, -2.2),
        _rect(10.0, 2.2, 15.0, 2.8),
        _rect(10.0, -0.3, 15.0, 0.3),
        _rect(10.0, -2.8, 15.0, -2.2),
    ]
    pallets = [
        _rect(8.6, 1.0, 9.4, 1.6, kind="overflyable"),
        _rect(8.6, -1.6, 9.4, -1.0, kind="overflyable"),
    ]
    return shelves + pallets


def _dynamic_obstacles(rng):
    fixed = [
        _rect(6.0, 2.5, 7.2, 3.5),
        _rect(7.5, -4.0, 8.7, -3.0),
    ]
    movers = []
    for k in range(4):
        c = np.array([rng.uniform(4.0, 12.0), rng.uniform(-5.0, 5.0)])
        ang = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(0.3, 0.8)
        movers.append(Obstacle(kind="dynamic", center=c, radius=0.4,
                               velocity=speed * np.array([np.cos(ang), np.sin(ang)]),
                               speed_band=(0.2, 0.9)))
    return fixed + movers


_SCENARIO_BOUNDS = {
    "playground": (-2.0, -9.0, 16.0, 9.0),
    "forest": (-2.0, -9.0, 18.0, 9.0),
    "factory": (-2.0, -9.0, 18.0, 9.0),
    "dynamic": (-2.0, -9.0, 16.0, 9.0),
}


def episode_seed(scenario_index: int, script: int, repeat: int) -> int:
    return (scenario_index * 1000 + script) * 100 + repeat


def build_episode(scenario: str, script: int = 0, repeat: int = 0) -> Episode:
    """One episode of the metric suite: 4 scenarios x 10 scripts x repeats."""
    if scenario not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {scenario!r}; options: {SCENARIO_NAMES}")
    if not (0 <= script < SCRIPTS_PER_SCENARIO):
        raise ConfigError(f"script must be in [0, {SCRIPTS_PER_SCENARIO})")
    idx = SCENARIO_NAMES.index(scenario)
    seed = episode_seed(idx, script, repeat)
    bounds = _SCENARIO_BOUNDS[scenario]

    script_rng = np.random.default_rng(np.random.SeedSequence([101, idx, script]))
    if scenario == "playground":
        obstacles = _playground_obstacles()
    elif scenario == "forest":
        obstacles = _forest_obstacles()
    elif scenario == "factory":
        obstacles = _factory_obstacles()
    else:
        obstacles = _dynamic_obstacles(np.random.default_rng(
            np.random.SeedSequence([103, script, repeat])))

    for _try in range(100):
        start = np.array([script_rng.uniform(2.6, 3.6), script_rng.uniform(-1.2, 1.2)])
        if _point_clear(start, obstacles, 0.9):
            break
    heading = script_rng.uniform(-0.7, 0.7)
    leader = _random_walk_script(script_rng, start, heading, obstacles, bounds,
                                 legs=int(script_rng.integers(4, 7)))
    world = World(bounds=bounds, obstacles=obstacles, leaders=[leader], seed=seed)
    robot_start = Pose(0.0, 0.0, float(np.arctan2(start[1], start[0])))
    return Episode(
        name=f"{scenario}-s{script:02d}-r{repeat}",
        world=world,
        robot_start=robot_start,
        lighting=LightingField(),
        duration=leader.end_time + SETTLING_WINDOW,
        meta={"scenario": scenario, "script": script, "repeat": repeat,
              "seed": seed},
    )


# ---------- leave-and-reappear scenario ----------

def reappear_episode(script: int = 0, repeat: int = 0) -> Episode:
    """Leader ducks into a screened alcove, leaves occluded, reappears far.

    Inside the alcove only a thin post clips the silhouette, so every
    close-range capture is a high-confidence partial that displaces the
    (dimly lit, hence lower-confidence) clean captures from the temporal
    buffer. The distance-binned buffer keeps its mid-range clean captures,
    which is what re-identifies the leader when it reappears at range.
    """
    if not (0 <= script < REAPPEAR_SCRIPTS):
        raise ConfigError(f"script must be in [0, {REAPPEAR_SCRIPTS})")
    rng = np.random.default_rng(np.random.SeedSequence([202, script]))
    bounds = (-3.0, -6.0, 12.0, 6.0)

    obstacles = [
        _rect(2.3, 0.7, 4.2, 1.0),      # upper wall
        _rect(2.3, -1.0, 4.2, -0.7),    # lower wall
        _rect(2.24, 0.35, 2.36, 0.7),   # front screen, upper slab
        _rect(2.24, -0.7, 2.36, -0.35),  # front screen, lower slab
        _rect(4.14, 0.2, 4.26, 0.7),    # back screen above the exit gap
        _rect(2.90, 0.0, 3.00, 0.10),   # sight post
    ]

    hold = np.array([3.2, 0.02 + rng.uniform(-0.03, 0.03)])
    start_y = -0.3 + rng.uniform(-0.08, 0.08)
    start = np.array([5.4 + rng.uniform(-0.15, 0.25), start_y])
    hold_time = 3.4 + rng.uniform(0.0, 0.5)
    exit_low = np.array([5.0 + rng.uniform(-0.2, 0.2), -1.35 + rng.uniform(-0.15, 0.0)])
    far = np.array([6.3 + rng.uniform(0.0, 0.3), -1.6 + rng.uniform(-0.1, 0.1)])
    reappear = np.array([6.4 + rng.uniform(-0.1, 0.2), -0.45 + rng.uniform(-0.06, 0.06)])

    def hd(a, b):
        d = b - a
        return float(np.arctan2(d[1], d[0]))

    t = 0.0
    wps = [(t, Pose(start[0], start[1], np.pi))]
    t += 1.2
    wps.append((t, Pose(start[0], start[1], np.pi)))
    path = [np.array([4.5, start_y + 0.05]), np.array([4.2, -0.25]),
            np.array([3.6, -0.12]), hold]
    prev = start
    for p in path:
        t += float(np.linalg.norm(p - prev)) / 0.8
        wps.append((t, Pose(p[0], p[1], hd(prev, p))))
        prev = p
    t += hold_time
    wps.append((t, Pose(hold[0], hold[1], wps[-1][1].theta)))
    exit_path = [np.array([3.62, -0.28]), np.array([4.2, -0.45]), exit_low, far,
                 np.array([far[0] + 0.25, -1.0]), reappear]
    for p in exit_path:
        t += float(np.linalg.norm(p - prev)) / 0.85
        wps.append((t, Pose(p[0], p[1], hd(prev, p))))
        prev = p
    t += 7.0  # stand in the open so the follower can close back in
    wps.append((t, Pose(reappear[0], reappear[1], wps[-1][1].theta)))

    leader = LeaderScript(waypoints=wps)
    lighting = LightingField(regions=[
        ((3.05, -0.15, 3.40, 0.20), 1.0),   # lit pocket behind the post
        ((-3.0, -6.0, 12.0, 6.0), 0.78),    # everything else is dim
    ])
    seed = 20000 + script * 100 + repeat
    world = World(bounds=bounds, obstacles=obstacles, leaders=[leader], seed=seed)
    return Episode(
        name=f"reappear-s{script:02d}-r{repeat}",
        world=world,
        robot_start=Pose(0.0, 0.0, 0.0),
        lighting=lighting,
        duration=t + 1.0,
        meta={"scenario": "reappear", "script": script, "repeat": repeat,
              "seed": seed, "hold_end": t},
    )


# ---------- scripted state-machine walkthrough ----------

def narrative_episode() -> Episode:
    """Single run that visits every follow state in a known order.

    Leg design: the leader only recedes or moves laterally while being
    followed (a closing gap would trigger an early retreat), ducks behind a
    wide wall whose hidden side stays out of the follower's line of sight
    until the follower rounds the east corner, re-emerges well clear of that
    corner (a reappearance inside the safe radius would re-enter Retreating
    instead of Following), and only then rushes the follower head-on.
    """
    bounds = (-2.0, -8.0, 14.0, 8.0)
    obstacles = [_rect(7.6, 2.0, 10.0, 2.3)]

    def hd(a, b):
        return float(np.arctan2(b[1] - a[1], b[0] - a[0]))

    p_start = np.array([6.5, 0.3])    # far: follower begins in Chasing
    p_east = np.array([10.6, 0.6])    # recede along the corridor, Following
    p_turn = np.array([10.6, 3.4])    # around the wall's east end
    p_hide = np.array([7.8, 3.6])     # shadowed from the south corridor
    p_out = np.array([9.0, 4.2])      # step back into view
    p_rush = np.array([11.3, 1.5])    # charge the follower, clear of the corner

    wps = [(0.0, Pose(p_start[0], p_start[1], np.pi))]
    t = 2.0
    wps.append((t, Pose(p_start[0], p_start[1], np.pi)))
    t += float(np.linalg.norm(p_east - p_start)) / 0.85
    wps.append((t, Pose(p_east[0], p_east[1], hd(p_start, p_east))))
    t += 1.2
    wps.append((t, Pose(p_east[0], p_east[1], hd(p_start, p_east))))
    t += float(np.linalg.norm(p_turn - p_east)) / 0.95
    wps.append((t, Pose(p_turn[0], p_turn[1], hd(p_east, p_turn))))
    t_occlude = t + 0.8  # sightline crosses the wall shortly after the turn
    t += float(np.linalg.norm(p_hide - p_turn)) / 1.0
    wps.append((t, Pose(p_hide[0], p_hide[1], hd(p_turn, p_hide))))
    t_hidden = t
    t += 3.2
    wps.append((t, Pose(p_hide[0], p_hide[1], hd(p_turn, p_hide))))
    t += float(np.linalg.norm(p_out - p_hide)) / 0.6
    wps.append((t, Pose(p_out[0], p_out[1], hd(p_hide, p_out))))
    t += 1.3
    wps.append((t, Pose(p_out[0], p_out[1], hd(p_hide, p_out))))
    t_rush = t
    t += float(np.linalg.norm(p_rush - p_out)) / 1.15
    wps.append((t, Pose(p_rush[0], p_rush[1], hd(p_out, p_rush))))
    t_rush_end = t
    leader0 = LeaderScript(waypoints=wps)

    switch_time = t_rush_end + 1.6
    far_second = Pose(2.0, -4.0, 0.0)
    leader1 = LeaderScript(waypoints=[(0.0, far_second),
                                      (switch_time + 8.0, far_second)])

    world = World(bounds=bounds, obstacles=obstacles,
                  leaders=[leader0, leader1], seed=4242)
    return Episode(
        name="narrative",
        world=world,
        robot_start=Pose(0.0, 0.0, 0.0),
        lighting=LightingField(),
        duration=switch_time + 5.0,
        switch=(switch_time, 1),
        meta={
            "occluded": t_occlude,
            "hidden_until": t_hidden,
            "rush_start": t_rush,
            "rush_end": t_rush_end,
            "switch": switch_time,
        },
    )


# ---------- episode config files ----------

def _require(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}: {key!r} has wrong type {type(val).__name__}")
    return val


def _parse_obstacle(entry: dict, i: int) -> Obstacle:
    where = f"obstacles[{i}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a mapping")
    kind = entry.get("kind", "static")
    try:
        if "vertices" in entry:
            verts = np.asarray(entry["vertices"], dtype=float)
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
                raise ConfigError(f"{where}: vertices must be an Nx2 list, N >= 3")
            return Obstacle(kind=kind, vertices=verts)
        if "center" in entry:
            return Obstacle(
                kind=kind,
                center=np.asarray(entry["center"], dtype=float),
                radius=float(entry.get("radius", 0.0)),
                velocity=np.asarray(entry.get("velocity", [0.0, 0.0]), dtype=float),
                resample_period=float(entry.get("resample_period", 3.0)),
                speed_band=tuple(entry.get("speed_band", (0.2, 1.0))),
            )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: needs either vertices or center+radius")


def _parse_leader(entry: dict, i: int) -> LeaderScript:
    where = f"leaders[{i}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a mapping")
    rows = _require(entry, "waypoints", list, where)
    if len(rows) < 2:
        raise ConfigError(f"{where}: needs at least 2 waypoints")
    wps = []
    pts = []
    times = []
    for j, row in enumerate(rows):
        if not isinstance(row, (list, tuple)) or len(row) != 3:
            raise ConfigError(f"{where}.waypoints[{j}]: expected [t, x, y]")
        t, x, y = (float(v) for v in row)
        times.append(t)
        pts.append(np.array([x, y]))
    for j in range(len(pts)):
        if j + 1 < len(pts):
            d = pts[j + 1] - pts[j]
            theta = float(np.arctan2(d[1], d[0])) if np.linalg.norm(d) > 1e-9 \
                else (wps[-1][1].theta if wps else 0.0)
        else:
            theta = wps[-1][1].theta if wps else 0.0
        wps.append((times[j], Pose(pts[j][0], pts[j][1], theta)))
    try:
        return LeaderScript(waypoints=wps)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def episode_from_dict(cfg: dict, name: str = "config",
                      seed: Optional[int] = None) -> Episode:
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    bounds = _require(cfg, "bounds", list, "config")
    if len(bounds) != 4:
        raise ConfigError("config: bounds must be [xmin, ymin, xmax, ymax]")
    bounds = tuple(float(v) for v in bounds)
    if bounds[0] >= bounds[2] or bounds[1] >= bounds[3]:
        raise ConfigError("config: bounds are inverted or empty")

    robot = _require(cfg, "robot", dict, "config")
    start = _require(robot, "start", list, "config.robot")
    if len(start) != 3:
        raise ConfigError("config.robot: start must be [x, y, theta]")
    robot_start = Pose(*(float(v) for v in start))

    obstacles = [_parse_obstacle(o, i)
                 for i, o in enumerate(cfg.get("obstacles", []) or [])]
    leader_rows = _require(cfg, "leaders", list, "config")
    if not leader_rows:
        raise ConfigError("config: at least one leader is required")
    leaders = [_parse_leader(l, i) for i, l in enumerate(leader_rows)]

    lighting_rows = cfg.get("lighting", []) or []
    regions = []
    for i, row in enumerate(lighting_rows):
        if not isinstance(row, dict) or "rect" not in row or "factor" not in row:
            raise ConfigError(f"lighting[{i}]: expected {{rect: [x0,y0,x1,y1], factor: f}}")
        rect = row["rect"]
        if len(rect) != 4:
            raise ConfigError(f"lighting[{i}]: rect must have 4 numbers")
        regions.append((tuple(float(v) for v in rect), float(row["factor"])))

    switch = None
    if "switch" in cfg and cfg["switch"] is not None:
        sw = cfg["switch"]
        if not isinstance(sw, dict) or "time" not in sw or "leader" not in sw:
            raise ConfigError("config.switch: expected {time: t, leader: index}")
        idx = int(sw["leader"])
        if not (0 <= idx < len(leaders)):
            raise ConfigError("config.switch: leader index out of range")
        switch = (float(sw["time"]), idx)

    duration = float(cfg.get("duration", max(l.end_time for l in leaders)))
    if duration <= 0:
        raise ConfigError("config: duration must be > 0")
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    world = World(bounds=bounds, obstacles=obstacles, leaders=leaders, seed=seed)
    return Episode(
        name=str(cfg.get("name", name)),
        world=world,
        robot_start=robot_start,
        lighting=LightingField(regions=regions),
        duration=duration,
        switch=switch,
        meta={"seed": seed, "source": name},
    )


def load_episode_yaml(path: str, seed: Optional[int] = None) -> Episode:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return episode_from_dict(cfg, name=path, seed=seed)
