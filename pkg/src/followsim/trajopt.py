"""Time-optimal trajectory optimization under soft constraints, and selection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import Infeasible
from .geometry import (
    Pose,
    cross2,
    hull_signed_distance,
    points_to_segments,
    polygon_edges,
    resample_polyline,
    wrap_angle,
)
from .goals import ArcSetGoal, LineSetGoal, PointPoseGoal
from .homotopy import signature as homotopy_signature

DEFAULT_WEIGHTS = {
    "obstacle": 50.0,
    "kinematic": 100.0,
    "accel": 10.0,
    "goal": 20.0,
    "velocity": 20.0,
}


# ---------- domain types ----------

@dataclass
class Trajectory:
    """Pose sequence p_0..p_m at a fixed per-segment time step."""

    xy: np.ndarray  # (m+1, 2)
    theta: np.ndarray  # (m+1,)
    dt: float
    signature: tuple = ()
    cost: Optional[float] = None
    v_cap: Optional[float] = None
    seed_length: float = 0.0

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if len(self.xy) < 3:
            raise ValueError("trajectory needs m >= 2 (at least 3 poses)")

    @property
    def m(self) -> int:
        return len(self.xy) - 1

    @property
    def duration(self) -> float:
        return self.m * self.dt

    def pose(self, i: int) -> Pose:
        return Pose(self.xy[i, 0], self.xy[i, 1], self.theta[i])

    def poses(self):
        return [self.pose(i) for i in range(len(self.xy))]

    def point_at_time(self, t: float) -> np.ndarray:
        """Linear interpolation along the timestamped poses."""
        if t <= 0:
            return self.xy[0].copy()
        if t >= self.duration:
            return self.xy[-1].copy()
        k = int(t / self.dt)
        u = (t - k * self.dt) / self.dt
        return (1 - u) * self.xy[k] + u * self.xy[k + 1]

    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.xy, axis=0), axis=1)))


@dataclass
class ConstraintSet:
    """Everything the optimizer must respect for one candidate."""

    static_groups: list = field(default_factory=list)  # ObstacleGroup entries
    dynamic_obstacles: list = field(default_factory=list)  # (pos, vel, radius)
    v_cap: float = 1.5
    a_max: float = 2.0
    margin: float = 0.1
    goal: object = None

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be > 0")


@dataclass
class OptimizerConfig:
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    iterations: int = 40
    tol: float = 1e-4
    eps: float = 0.2
    dt_nominal: float = 0.3
    m_min: int = 4
    m_max: int = 28
    seed_time_slack: float = 1.12
    velocity_cushion: float = 0.99
    clearance_cushion: float = 0.02
    facing_cushion: float = 0.5  # fraction of eps where the facing hinge engages
    literal_similarity: bool = False


# ---------- seeds ----------

def heading_for_goal(goal, p_end: np.ndarray) -> Optional[float]:
    """Final heading suggested by the goal (facing the arc center, etc.)."""
    if isinstance(goal, ArcSetGoal):
        to_center = goal.center - np.asarray(p_end, dtype=float)
        return float(np.arctan2(to_center[1], to_center[0]))
    if isinstance(goal, PointPoseGoal) and goal.heading is not None:
        return goal.heading
    return None


def seed_to_trajectory(polyline: np.ndarray, robot_theta: float, v_cap: float,
                       cfg: OptimizerConfig, goal=None) -> Trajectory:
    """Time-parameterize a seed polyline: m chosen so segment length ~ v_cap*dt.

    dt stretches above dt_nominal (with slack for detour growth) when the
    pose cap would otherwise force per-segment speeds past the cap.
    """
    poly = np.asarray(polyline, dtype=float)
    length = float(np.sum(np.linalg.norm(np.diff(poly, axis=0), axis=1))) if len(poly) > 1 else 0.0
    v_ref = max(v_cap, 1e-3)
    m = int(np.clip(round(length / (v_ref * cfg.dt_nominal)) if length > 0 else cfg.m_min,
                    cfg.m_min, cfg.m_max))
    dt = max(cfg.dt_nominal, cfg.seed_time_slack * length / (m * v_ref))
    xy = resample_polyline(poly, m + 1)
    theta = np.zeros(m + 1)
    diffs = np.diff(xy, axis=0)
    seg_ang = np.arctan2(diffs[:, 1], diffs[:, 0])
    seg_len = np.linalg.norm(diffs, axis=1)
    prev = robot_theta
    for i in range(m):
        if seg_len[i] > 1e-9:
            prev = float(seg_ang[i])
        theta[i + 1] = prev
    theta[0] = robot_theta
    hint = heading_for_goal(goal, xy[-1])
    if hint is not None:
        theta[-1] = hint
    return Trajectory(xy=xy, theta=theta, dt=dt, v_cap=v_cap, seed_length=length)


def _hull_sd(pts, hull, ea, eb):
    """hull_signed_distance with precomputed edge arrays.

    Fused form: squared distances everywhere, one sqrt on the per-point
    minima — this sits on the optimizer's innermost path.
    """
    if len(hull) == 1:
        diff = pts - hull[0]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        grad = np.where(dist[:, None] > 1e-12,
                        diff / np.maximum(dist, 1e-12)[:, None], 0.0)
        return dist, grad
    e = eb - ea
    dd = np.einsum("ij,ij->i", e, e)
    safe = np.where(dd < 1e-18, 1.0, dd)
    ap = pts[:, None, :] - ea[None, :, :]
    t = np.einsum("nmj,mj->nm", ap, e) / safe[None, :]
    t = np.where((dd < 1e-18)[None, :], 0.0, np.clip(t, 0.0, 1.0))
    closest = ea[None, :, :] + t[:, :, None] * e[None, :, :]
    diffm = pts[:, None, :] - closest
    d2 = np.einsum("nmj,nmj->nm", diffm, diffm)
    k = np.argmin(d2, axis=1)
    idx = np.arange(len(pts))
    q = closest[idx, k]
    diff = pts - q
    dist = np.sqrt(d2[idx, k])
    if len(hull) >= 3:
        side = e[None, :, 0] * ap[:, :, 1] - e[None, :, 1] * ap[:, :, 0]
        inside = np.all(side >= -1e-12, axis=1)
    else:
        inside = np.zeros(len(pts), dtype=bool)
    sd = np.where(inside, -dist, dist)
    gdiff = np.where(inside[:, None], -diff, diff)
    grad = np.where(dist[:, None] > 1e-12,
                    gdiff / np.maximum(dist, 1e-12)[:, None], 0.0)
    return sd, grad


# ---------- residual assembly ----------

class _Problem:
    def __init__(self, seed: Trajectory, cs: ConstraintSet, cfg: OptimizerConfig):
        self.p0 = seed.xy[0].copy()
        self.th0 = float(seed.theta[0])
        self.m = seed.m
        self.dt = seed.dt
        self.cs = cs
        self.cfg = cfg
        self.hulls = [g.boundary for g in cs.static_groups]
        self.margin_eff = cs.margin + cfg.clearance_cushion
        self.v_eff = cfg.velocity_cushion * cs.v_cap
        self._hull_cache = []
        for g in cs.static_groups:
            hull = np.asarray(g.boundary, dtype=float)
            if len(hull) >= 3:
                ea, eb = polygon_edges(hull)
            elif len(hull) == 2:
                ea, eb = hull[:1], hull[1:2]
            else:
                ea = eb = None
            cen = hull.mean(axis=0)
            rad = float(np.max(np.linalg.norm(hull - cen, axis=1)))
            self._hull_cache.append((hull, ea, eb, cen, rad))

    def pack(self, traj: Trajectory) -> np.ndarray:
        return np.concatenate([np.concatenate([traj.xy[i], [traj.theta[i]]])
                               for i in range(1, self.m + 1)])

    def unpack(self, x: np.ndarray):
        arr = x.reshape(self.m, 3)
        xy = np.vstack([self.p0[None, :], arr[:, :2]])
        th = np.concatenate([[self.th0], arr[:, 2]])
        return xy, th

    def assemble(self, x: np.ndarray, want_jac: bool):
        """Weighted residual vector, optional dense Jacobian, kink margins."""
        m, dt = self.m, self.dt
        cfg, cs = self.cfg, self.cs
        xy, th = self.unpack(x)
        nvar = 3 * m

        diffs = np.diff(xy, axis=0)  # (m, 2)
        seg_len = np.linalg.norm(diffs, axis=1)
        safe_len = np.maximum(seg_len, 1e-9)
        unit_d = diffs / safe_len[:, None]
        idx = np.arange(m)
        c_next = 3 * idx            # column base of p_{i+1} for segment i
        c_prev = 3 * (idx - 1)      # column base of p_i (valid for i >= 1)

        # fixed row layout so the residual length never changes with x
        n_acc = max(m - 1, 0)
        n_goal = len(self._goal_template())
        n_hull = len(self._hull_cache) * m
        n_dyn = len(cs.dynamic_obstacles) * m
        total = m + m + n_acc + m + n_hull + n_dyn + n_goal
        r = np.zeros(total)
        kink = np.full(total, np.inf)
        J = np.zeros((total, nvar)) if want_jac else None
        ofs = 0

        def scatter(rows, cols, vals):
            J[rows, cols] += vals[:, 0]
            J[rows, cols + 1] += vals[:, 1]

        # -- time: sqrt(L_i / v_cap) per segment, the Sum L/v term of J --
        v_ref = max(cs.v_cap, 1e-3)
        r[ofs:ofs + m] = np.sqrt(np.maximum(seg_len, 1e-9) / v_ref)
        kink[ofs:ofs + m] = np.where(seg_len > 1e-6, np.inf, 0.0)
        if want_jac:
            denom = 2.0 * np.sqrt(np.maximum(seg_len, 1e-9) * v_ref)
            grad = unit_d / denom[:, None]
            grad = np.where((seg_len > 1e-6)[:, None], grad, 0.0)
            scatter(ofs + idx, c_next, grad)
            scatter(ofs + idx[1:], c_prev[1:], -grad[1:])
        ofs += m

        # -- velocity hinge: L_i/dt <= cushioned cap --
        w = np.sqrt(cfg.weights["velocity"])
        slack = seg_len / dt - self.v_eff
        active = slack > 0
        r[ofs:ofs + m] = w * np.where(active, slack, 0.0)
        kink[ofs:ofs + m] = np.abs(slack)
        if want_jac and np.any(active):
            act = np.flatnonzero(active)
            grad = w * unit_d[act] / dt
            scatter(ofs + act, c_next[act], grad)
            inner = act[act >= 1]
            if len(inner):
                grad_in = w * unit_d[inner] / dt
                scatter(ofs + inner, c_prev[inner], -grad_in)
        ofs += m

        # -- acceleration hinge: |v_{i+1} - v_i| <= a_max * dt --
        if m >= 2:
            w = np.sqrt(cfg.weights["accel"])
            v = seg_len / dt
            a = np.diff(v) / dt
            slack = np.abs(a) - cs.a_max
            active = slack > 0
            r[ofs:ofs + n_acc] = w * np.where(active, slack, 0.0)
            kink[ofs:ofs + n_acc] = np.minimum(np.abs(slack), np.abs(a) + 1e-12)
            if want_jac and np.any(active):
                act = np.flatnonzero(active)
                s = (w * np.sign(a[act]) / dt**2)[:, None]
                # v_{i+1} depends on p_{i+2}, p_{i+1}; v_i on p_{i+1}, p_i
                scatter(ofs + act, 3 * (act + 1), s * unit_d[act + 1])
                scatter(ofs + act, 3 * act, -s * unit_d[act + 1])
                scatter(ofs + act, 3 * act, -s * unit_d[act])
                inner = act[act >= 1]
                if len(inner):
                    s_in = (w * np.sign(a[inner]) / dt**2)[:, None]
                    scatter(ofs + inner, 3 * (inner - 1), s_in * unit_d[inner])
            ofs += n_acc

        # -- nonholonomic kinematics: heading bisection cross form --
        w = np.sqrt(cfg.weights["kinematic"])
        ci = np.cos(th[:-1]) + np.cos(th[1:])
        si = np.sin(th[:-1]) + np.sin(th[1:])
        r[ofs:ofs + m] = w * (ci * diffs[:, 1] - si * diffs[:, 0])
        if want_jac:
            dpos = np.stack([-w * si, w * ci], axis=1)
            scatter(ofs + idx, c_next, dpos)
            scatter(ofs + idx[1:], c_prev[1:], -dpos[1:])
            dth_i = w * (-np.sin(th[:-1]) * diffs[:, 1] - np.cos(th[:-1]) * diffs[:, 0])
            dth_j = w * (-np.sin(th[1:]) * diffs[:, 1] - np.cos(th[1:]) * diffs[:, 0])
            J[ofs + idx[1:], c_prev[1:] + 2] += dth_i[1:]
            J[ofs + idx, c_next + 2] += dth_j
        ofs += m

        # -- static clearance hinges --
        w = np.sqrt(cfg.weights["obstacle"])
        pts = xy[1:]
        for hull, ea, eb, cen, rad in self._hull_cache:
            # far hulls contribute exact zeros; the buffer is wide enough
            # that finite-difference probes cannot flip the test
            if np.min(np.linalg.norm(pts - cen, axis=1)) - rad \
                    > self.margin_eff + 0.25:
                ofs += m
                continue
            sd, grad = _hull_sd(pts, hull, ea, eb)
            slack = self.margin_eff - sd
            active = slack > 0
            r[ofs:ofs + m] = w * np.where(active, slack, 0.0)
            kink[ofs:ofs + m] = np.abs(slack)
            if want_jac and np.any(active):
                act = np.flatnonzero(active)
                scatter(ofs + act, 3 * act, -w * grad[act])
            ofs += m

        # -- dynamic clearance hinges (constant-velocity prediction) --
        if cs.dynamic_obstacles:
            w = np.sqrt(cfg.weights["obstacle"])
            times = np.arange(1, m + 1) * dt
            for pos, vel, radius in cs.dynamic_obstacles:
                q = np.asarray(pos, dtype=float)[None, :] \
                    + times[:, None] * np.asarray(vel, dtype=float)[None, :]
                diff = pts - q
                dist = np.maximum(np.linalg.norm(diff, axis=1), 1e-9)
                slack = (self.margin_eff + radius) - dist
                active = slack > 0
                r[ofs:ofs + m] = w * np.where(active, slack, 0.0)
                kink[ofs:ofs + m] = np.abs(slack)
                if want_jac and np.any(active):
                    act = np.flatnonzero(active)
                    grad = diff[act] / dist[act, None]
                    scatter(ofs + act, 3 * act, -w * grad)
                ofs += m

        # -- goal residuals --
        r_goal, J_goal, k_goal = self._goal_rows(xy, th, want_jac, nvar)
        r[ofs:ofs + n_goal] = r_goal
        kink[ofs:ofs + n_goal] = k_goal
        if want_jac and n_goal:
            J[ofs:ofs + n_goal] = J_goal
        return r, J, kink

    def _goal_template(self):
        """Row labels for the goal family; fixes the residual layout."""
        goal = self.cs.goal
        if goal is None:
            return ()
        if isinstance(goal, PointPoseGoal):
            return ("x", "y", "heading") if goal.heading is not None else ("x", "y")
        if isinstance(goal, LineSetGoal):
            return ("cross", "lo", "hi")
        span = goal.span
        if span >= 2.0 * np.pi - 1e-6:
            return ("radial", "facing")
        if span <= np.pi:
            return ("radial", "arc_a", "arc_b", "facing")
        return ("radial", "arc_wrap", "facing")

    def _goal_rows(self, xy, th, want_jac, nvar):
        cfg, cs = self.cfg, self.cs
        goal = cs.goal
        w = np.sqrt(cfg.weights["goal"])
        pm = xy[-1]
        thm = th[-1]
        bx = 3 * (self.m - 1)  # column base of p_m
        rows, grads, kinks = [], [], []

        def add(value, dpx=0.0, dpy=0.0, dth=0.0, kink=np.inf):
            rows.append(w * value)
            grads.append((w * dpx, w * dpy, w * dth))
            kinks.append(kink)

        if goal is None:
            pass
        elif isinstance(goal, PointPoseGoal):
            add(pm[0] - goal.position[0], dpx=1.0)
            add(pm[1] - goal.position[1], dpy=1.0)
            if goal.heading is not None:
                d = wrap_angle(thm - goal.heading)
                add(d, dth=1.0, kink=np.pi - abs(d))
        elif isinstance(goal, LineSetGoal):
            u = (goal.p2 - goal.p1) / goal.length
            wv = pm - goal.p1
            add(cross2(u, wv), dpx=-u[1], dpy=u[0])
            t = float(u @ wv)
            lo = -t
            add(max(0.0, lo), dpx=-u[0] if lo > 0 else 0.0,
                dpy=-u[1] if lo > 0 else 0.0, kink=abs(lo))
            hi = t - goal.length
            add(max(0.0, hi), dpx=u[0] if hi > 0 else 0.0,
                dpy=u[1] if hi > 0 else 0.0, kink=abs(hi))
        elif isinstance(goal, ArcSetGoal):
            v = pm - goal.center
            rho = max(float(np.linalg.norm(v)), 1e-9)
            vh = v / rho
            add(rho - goal.radius, dpx=vh[0], dpy=vh[1])
            span = goal.span
            if span < 2.0 * np.pi - 1e-6:
                if span <= np.pi:
                    e_f = np.array([np.cos(goal.ang_from), np.sin(goal.ang_from)])
                    a_to = goal.ang_from + span
                    e_t = np.array([np.cos(a_to), np.sin(a_to)])
                    c1 = float(cross2(e_f, v))
                    act = c1 < 0
                    add(max(0.0, -c1), dpx=e_f[1] if act else 0.0,
                        dpy=-e_f[0] if act else 0.0, kink=abs(c1))
                    c2 = float(cross2(v, e_t))
                    act = c2 < 0
                    add(max(0.0, -c2), dpx=-e_t[1] if act else 0.0,
                        dpy=e_t[0] if act else 0.0, kink=abs(c2))
                else:
                    half = span / 2.0
                    delta = wrap_angle(float(np.arctan2(v[1], v[0])) - goal.ang_mid)
                    viol = abs(delta) - half
                    act = viol > 0
                    s = np.sign(delta) if act else 0.0
                    add(max(0.0, viol), dpx=s * (-v[1] / rho**2),
                        dpy=s * (v[0] / rho**2),
                        kink=min(abs(viol), np.pi - abs(delta)))
            # facing: heading within eps of the direction to the center
            u = goal.center - pm
            ru = max(float(np.linalg.norm(u)), 1e-9)
            phi = float(np.arctan2(u[1], u[0]))
            df = wrap_angle(thm - phi)
            hinge = cfg.facing_cushion * goal.eps
            viol = abs(df) - hinge
            act = viol > 0
            s = np.sign(df) if act else 0.0
            add(max(0.0, viol), dpx=s * (-u[1] / ru**2), dpy=s * (u[0] / ru**2),
                dth=s * 1.0, kink=min(abs(viol), np.pi - abs(df)))
        else:
            raise TypeError(f"unknown goal type {type(goal)!r}")

        r = np.array(rows)
        k = np.array(kinks)
        if not want_jac:
            return r, None, k
        J = np.zeros((len(rows), nvar))
        for i, (dpx, dpy, dth) in enumerate(grads):
            J[i, bx] = dpx
            J[i, bx + 1] = dpy
            J[i, bx + 2] = dth
        return r, J, k


# ---------- public entry points ----------

def objective_value(traj: Trajectory, cs: ConstraintSet, cfg: OptimizerConfig) -> float:
    """Full soft objective J (time term plus weighted squared penalties)."""
    prob = _Problem(traj, cs, cfg)
    r, _, _ = prob.assemble(prob.pack(traj), want_jac=False)
    return float(r @ r)


def feasibility_report(traj: Trajectory, cs: ConstraintSet, cfg: OptimizerConfig) -> dict:
    """Hard-check quantities: worst clearance, speed, and goal residuals."""
    xy, th = traj.xy, traj.theta
    pts = xy[1:]
    clearance = np.inf
    for g in cs.static_groups:
        sd, _ = hull_signed_distance(pts, g.boundary)
        clearance = min(clearance, float(np.min(sd) - cs.margin))
    if cs.dynamic_obstacles:
        times = np.arange(1, traj.m + 1) * traj.dt
        for pos, vel, radius in cs.dynamic_obstacles:
            q = np.asarray(pos, dtype=float)[None, :] + times[:, None] * np.asarray(vel, dtype=float)[None, :]
            dist = np.linalg.norm(pts - q, axis=1)
            clearance = min(clearance, float(np.min(dist) - radius - cs.margin))
    seg_len = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    max_speed = float(np.max(seg_len) / traj.dt) if len(seg_len) else 0.0

    goal = cs.goal
    pm, thm = xy[-1], th[-1]
    pos_err = 0.0
    ang_err = 0.0
    if isinstance(goal, PointPoseGoal):
        pos_err = float(np.linalg.norm(pm - goal.position))
        if goal.heading is not None:
            ang_err = abs(wrap_angle(thm - goal.heading))
    elif isinstance(goal, LineSetGoal):
        u = (goal.p2 - goal.p1) / goal.length
        wv = pm - goal.p1
        t = float(u @ wv)
        pos_err = max(abs(float(cross2(u, wv))), max(0.0, -t), max(0.0, t - goal.length))
    elif isinstance(goal, ArcSetGoal):
        v = pm - goal.center
        rho = float(np.linalg.norm(v))
        pos_err = abs(rho - goal.radius)
        if goal.span < 2.0 * np.pi - 1e-6:
            delta = wrap_angle(float(np.arctan2(v[1], v[0])) - goal.ang_mid)
            ang_err = max(ang_err, max(0.0, abs(delta) - goal.span / 2.0))
        u = goal.center - pm
        phi = float(np.arctan2(u[1], u[0]))
        facing = abs(wrap_angle(thm - phi))
        ang_err = max(ang_err, max(0.0, facing - goal.eps))
    return {
        "clearance": clearance,
        "max_speed": max_speed,
        "goal_pos_err": pos_err,
        "goal_ang_err": ang_err,
    }


def optimize(seed: Trajectory, cs: ConstraintSet, cfg: OptimizerConfig = None) -> Trajectory:
    """Damped Gauss-Newton descent on the soft objective; p_0 stays fixed.

    Steps are only accepted when they reduce J, so the returned trajectory
    never costs more than the seed. Raises Infeasible when the result fails
    a hard goal-tolerance or clearance check.
    """
    cfg = cfg or OptimizerConfig()
    prob = _Problem(seed, cs, cfg)
    x = prob.pack(seed)
    r, _, _ = prob.assemble(x, want_jac=False)
    cost_sq = float(r @ r)
    lam = 1e-3
    eye = np.eye(3 * prob.m)
    for _ in range(cfg.iterations):
        r, J, _ = prob.assemble(x, want_jac=True)
        g = J.T @ r
        h = J.T @ J
        improved = False
        for _ in range(6):
            try:
                delta = np.linalg.solve(h + lam * eye, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + delta
            r_new, _, _ = prob.assemble(x_new, want_jac=False)
            c_new = float(r_new @ r_new)
            if c_new < cost_sq - 1e-12:
                gain = cost_sq - c_new
                x, cost_sq = x_new, c_new
                lam = max(lam / 3.0, 1e-7)
                improved = True
                break
            lam *= 10.0
        if not improved or lam > 1e8:
            break
        if improved and gain < cfg.tol:
            break

    xy, th = prob.unpack(x)
    th = wrap_angle(th)
    out = Trajectory(xy=xy, theta=th, dt=seed.dt, v_cap=cs.v_cap,
                     seed_length=seed.seed_length)

    # stretch time when per-segment speed still exceeds the cap; pure dt
    # scaling never lengthens the path, so J cannot rise for static terms
    report = feasibility_report(out, cs, cfg)
    if report["max_speed"] > cs.v_cap * (1.0 + 5e-4) and cs.v_cap > 0:
        factor = report["max_speed"] / (cs.v_cap * (1.0 - 1e-4))
        stretched = replace(out, dt=out.dt * factor)
        if not cs.dynamic_obstacles or (
            objective_value(stretched, cs, cfg) <= objective_value(out, cs, cfg) + 1e-9
        ):
            out = stretched
            report = feasibility_report(out, cs, cfg)

    if report["clearance"] < -1e-6:
        raise Infeasible(f"clearance violated by {-report['clearance']:.4f} m")
    if report["goal_pos_err"] > 3.0 * cfg.eps or report["goal_ang_err"] > 3.0 * cfg.eps:
        raise Infeasible("goal residual above 3*eps")
    if report["max_speed"] > cs.v_cap * (1.0 + 1e-3):
        raise Infeasible("speed cap violated")

    out.signature = (homotopy_signature(out.xy, cs.static_groups)
                     if cs.static_groups else ())
    out.cost = cost(out)
    return out


def cost(traj: Trajectory) -> float:
    """Time cost g(tau): path length over the velocity cap."""
    v = traj.v_cap if traj.v_cap else 1e-3
    return float(traj.length() / max(v, 1e-3))


def select(candidates, previous_signature=None, alpha: float = 0.5,
           literal: bool = False) -> Trajectory:
    """Pick argmin f(tau) * g(tau) with the hysteresis discount f.

    f = (1 - alpha) + alpha * (fraction of signature entries disagreeing
    with the previous selection); entries whose previous value is unknown
    (None) count as agreeing. literal=True uses the printed difference sum
    instead of the disagreement fraction.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if not (0 <= alpha < 1):
        raise ValueError("alpha must be in [0, 1)")
    best = None
    best_score = np.inf
    for cand in candidates:
        g = cand.cost if cand.cost is not None else cost(cand)
        sig = tuple(cand.signature)
        if previous_signature is None or len(sig) == 0:
            f = 1.0
        else:
            l = len(sig)
            prev = list(previous_signature) + [None] * (l - len(previous_signature))
            if literal:
                diff = sum((p - s) for p, s in zip(prev, sig) if p is not None)
                f = (1.0 - alpha) + alpha * diff / l
            else:
                disagree = sum(1 for p, s in zip(prev, sig) if p is not None and p != s)
                f = (1.0 - alpha) + alpha * disagree / l
        score = f * g
        if score < best_score - 1e-12:
            best = cand
            best_score = score
    return best
