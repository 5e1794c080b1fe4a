"""Leader-following agent: perception, state adaptation, planning, control."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptation import (
    AdaptationConfig,
    FollowState,
    StateMachine,
    TransitionFlags,
    chasing_goal,
    following_goal,
    planning_goal,
    retreating_goal,
    safe_distance,
    speed_cap,
)
from .costmap import CostmapConfig, build_costmap, cluster_groups
from .errors import (
    EmptyBuffers,
    FollowSimError,
    LeaderInsideMap,
    NeverSeen,
    NoFreeArc,
    NoPath,
    NoVisibleLeader,
)
from .geometry import Pose, hull_signed_distance, unit, wrap_angle
from .goals import PointPoseGoal, goal_nearest_point, goal_to_dict
from .perception import (
    AppearanceModel,
    DistanceFrameBuffer,
    LeaderTrack,
    TemporalBuffer,
    kf_predict_update,
    match_leader,
    record_last_seen,
    synthesize_embedding,
    update_distance_buffer,
    update_temporal_buffer,
    white_accel_q,
)
from .planner import PlannerConfig, align_signature, plan, straight_plan
from .trajopt import OptimizerConfig
from .world import RobotModel, SensorModel, World, leader_mean_state, sense

VARIANTS = ("full", "no_dfb", "no_graph_planner", "baseline_pursuit")



def _project_goal_free(goal, groups):
    """Move a point goal out of occupied hulls; other goal types are built
    from free costmap cells already."""
    if not isinstance(goal, PointPoseGoal) or not groups:
        return goal
    p = np.asarray(goal.position, dtype=float).copy()
    for _ in range(3):
        moved = False
        for g in groups:
            if len(g.boundary) < 3:
                continue
            sd, grad = hull_signed_distance(p[None, :], g.boundary)
            if sd[0] < 0.1:
                p = p + (0.25 - sd[0]) * grad[0]
                moved = True
        if not moved:
            break
    if np.allclose(p, goal.position):
        return goal
    return PointPoseGoal(position=p, heading=goal.heading, eps=goal.eps)


@dataclass
class AgentConfig:
    variant: str = "full"
    replan_interval: float = 0.45
    match_threshold: float = 0.8
    mean_window: float = 0.6
    id_hold: float = 0.5  # continuity window after the last hard match
    reinit_gap: float = 1.0  # track restarts after this long unidentified
    kf_sigma_a: float = 0.8
    kf_sigma_r: float = 0.06
    track_gate: float = 9.21  # chi-square 2 dof, 99 percent
    lookahead: float = 0.4
    k_heading: float = 2.5
    pursuit_gain: float = 1.2
    pursuit_standoff: float = 1.0
    goal_margin: float = 0.1
    dynamic_scan_pad: float = 0.4  # extra radius when scrubbing dynamic returns
    dynamic_plan_pad: float = 0.25  # movers can turn between replans
    robot: RobotModel = field(default_factory=RobotModel)
    sensor: SensorModel = field(default_factory=SensorModel)
    costmap: CostmapConfig = field(default_factory=CostmapConfig)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    # control replans every few ticks, so a shorter descent is enough here
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(iterations=14, tol=1e-3))
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


class FollowerAgent:
    """One robot following the world's active leader.

    update(dt) runs the full decision tick: sense, re-identify, track,
    adapt the follow state, replan when due, and integrate the unicycle.
    """

    def __init__(self, world: World, start_pose: Pose, config: AgentConfig = None,
                 seed: int = 0, lighting_field=None):
        self.world = world
        self.config = config or AgentConfig()
        self.pose = start_pose.copy()
        self.appearance = AppearanceModel.from_seed(
            seed, lighting_field=lighting_field,
            sensor_range=self.config.sensor.range)
        self.machine = StateMachine(config=self.config.adaptation)
        self.temporal = TemporalBuffer()
        self.dfb = DistanceFrameBuffer()
        self.track: Optional[LeaderTrack] = None
        self.history = deque(maxlen=200)
        self.ever_identified = False
        self.last_identified = -np.inf
        self.new_leader_command = False
        self.prev_signature = None
        self.prev_centroids = None
        self.trajectory = None
        self.traj_start = 0.0
        self.last_replan = -np.inf
        self.last_planned_state = None
        self.v_cmd = 0.0
        self.omega_cmd = 0.0
        self.collisions = 0
        self.state = self.machine.state
        self.plan_snapshot = None

    # ---------- external commands ----------

    def command_switch(self, leader_index: int):
        """Hand the agent a new leader to follow."""
        if not (0 <= leader_index < len(self.world.leaders)):
            raise ValueError("leader_index out of range")
        self.world.active_leader = leader_index
        self.new_leader_command = True

    def _reset_identity(self):
        self.temporal = TemporalBuffer()
        self.dfb = DistanceFrameBuffer()
        self.track = None
        self.ever_identified = False
        self.last_identified = -np.inf
        self.trajectory = None
        self.prev_signature = None
        self.prev_centroids = None

    # ---------- perception ----------

    @property
    def _use_dfb(self) -> bool:
        return self.config.variant in ("full", "no_graph_planner")

    def _innovation_gate(self, z: np.ndarray, dt: float) -> bool:
        """Would this measurement be a plausible continuation of the track?"""
        track = self.track
        f = np.eye(4)
        f[0, 2] = dt
        f[1, 3] = dt
        x = f @ track.state
        p = f @ track.covariance @ f.T + white_accel_q(dt, self.config.kf_sigma_a)
        s = p[:2, :2] + self.config.kf_sigma_r**2 * np.eye(2)
        nu = z - x[:2]
        try:
            val = float(nu @ np.linalg.solve(s, nu))
        except np.linalg.LinAlgError:
            return False
        return val <= self.config.track_gate

    def _perceive(self, obs, t: float, dt: float):
        cfg = self.config
        embedding = None
        matched = False
        score = None
        if obs.visible:
            embedding = synthesize_embedding(self.appearance, obs, self.pose, t)
            dfb_for_match = self.dfb if self._use_dfb else DistanceFrameBuffer()
            try:
                matched, score = match_leader(embedding, self.temporal,
                                              dfb_for_match, cfg.match_threshold)
            except EmptyBuffers:
                matched, score = True, 1.0  # first contact seeds the identity

        z = obs.point_set.mean(axis=0) if obs.visible else None
        identified = matched
        if (not identified and obs.visible and self.track is not None
                and t - self.last_identified <= cfg.id_hold):
            identified = self._innovation_gate(z, dt)

        if self.track is None:
            if identified:
                state0 = np.array([z[0], z[1], 0.0, 0.0])
                self.track = LeaderTrack(state=state0)
                self.track = kf_predict_update(self.track, z, dt,
                                               cfg.kf_sigma_a, cfg.kf_sigma_r)
        elif identified and matched and t - self.last_identified > cfg.reinit_gap:
            # stale track: restart at the re-acquired position
            state0 = np.array([z[0], z[1], 0.0, 0.0])
            self.track = LeaderTrack(state=state0)
            self.track = kf_predict_update(self.track, z, dt,
                                           cfg.kf_sigma_a, cfg.kf_sigma_r)
        else:
            self.track = kf_predict_update(self.track, z if identified else None,
                                           dt, cfg.kf_sigma_a, cfg.kf_sigma_r)

        if identified:
            self.last_identified = t
            self.ever_identified = True
            self.temporal = update_temporal_buffer(self.temporal, embedding)
            if self._use_dfb:
                self.dfb = update_distance_buffer(self.dfb, embedding)
            try:
                pm, vm = leader_mean_state(self.history, cfg.mean_window)
            except NoVisibleLeader:
                pm, vm = z, np.zeros(2)
            self.track = record_last_seen(self.track, pm, vm, t)
        return identified, matched, score

    # ---------- planning ----------

    def _build_costmap(self, scan: np.ndarray, obs):
        cfg = self.config
        scan_rel = scan - self.pose.xy if len(scan) else np.zeros((0, 2))
        dyn = self.world.dynamic_obstacle_states()
        if len(scan_rel) and dyn:
            keep = np.ones(len(scan_rel), dtype=bool)
            for center, _vel, radius in dyn:
                rel_c = np.asarray(center) - self.pose.xy
                d = np.linalg.norm(scan_rel - rel_c[None, :], axis=1)
                keep &= d > radius + cfg.dynamic_scan_pad
            scan_rel = scan_rel[keep]
        leader_rel = (obs.point_set - self.pose.xy) if obs.visible else np.zeros((0, 2))
        dyn_padded = [(c, v, r + cfg.dynamic_plan_pad) for c, v, r in dyn]
        return build_costmap(scan_rel, leader_rel, cfg.costmap, self.pose), dyn_padded

    def _goal_sets(self, state: FollowState, cmap, p_ref, v_ref, d_t):
        acfg = self.config.adaptation
        if state == FollowState.SWITCHING or p_ref is None:
            return None
        if state == FollowState.PLANNING:
            last = self.track.last_seen_pose if self.track is not None else None
            return planning_goal(last, acfg)
        if state == FollowState.CHASING:
            try:
                return chasing_goal(self.pose, p_ref, cmap, acfg)
            except LeaderInsideMap:
                return following_goal(p_ref, cmap, d_t, acfg)
        if state == FollowState.RETREATING:
            return retreating_goal(p_ref, v_ref, cmap, d_t, acfg)
        return following_goal(p_ref, cmap, d_t, acfg)

    def _replan(self, state, scan, obs, p_ref, v_ref, d_t, v_cap, t):
        cfg = self.config
        cmap, dyn = self._build_costmap(scan, obs)
        groups = cluster_groups(cmap)
        try:
            goal_sets = self._goal_sets(state, cmap, p_ref, v_ref, d_t)
        except (NoFreeArc, NeverSeen, LeaderInsideMap, NoVisibleLeader):
            goal_sets = None
        if not goal_sets:
            return 0
        plan_dyn = self._soften(dyn)
        if p_ref is not None and state != FollowState.PLANNING:
            # the leader is a collision body too: candidates must clear its
            # predicted motion. Planning aims at a stale last-seen pose, where
            # this disc would forbid its own goal, so it is skipped there.
            avoid_r = self.world.leader_radius + cfg.robot.footprint_radius + 0.05
            plan_dyn = plan_dyn + self._soften(
                [(np.asarray(p_ref, dtype=float),
                  np.asarray(v_ref, dtype=float), avoid_r)])
        goal_sets = [_project_goal_free(g, groups) for g in goal_sets]
        if cfg.variant == "no_graph_planner":
            anchors = [goal_nearest_point(g, self.pose.xy) for g in goal_sets]
            dists = [np.linalg.norm(a - self.pose.xy) for a in anchors]
            target = anchors[int(np.argmin(dists))]
            result = straight_plan(self.pose, target, groups, plan_dyn,
                                   v_cap, cfg.robot.a_max, cfg.goal_margin,
                                   cfg.optimizer)
        else:
            prev = align_signature(self.prev_signature, self.prev_centroids,
                                   groups, cfg.planner.align_tol)
            try:
                result = plan(self.pose, goal_sets, groups, plan_dyn, v_cap,
                              cfg.robot.a_max, cfg.goal_margin, cfg.optimizer,
                              cfg.planner, previous_signature=prev)
            except NoPath:
                return 0
        if result.best is None:
            self._dodge(groups, dyn, v_cap, t)
            return 0
        self.trajectory = result.best
        self.traj_start = t
        self.prev_signature = tuple(result.best.signature)
        self.prev_centroids = np.array([g.centroid for g in groups]) \
            if groups else np.zeros((0, 2))
        sel = next((i for i, c in enumerate(result.candidates)
                    if c is result.best), 0)
        # keep the busiest replan of the episode for rendering
        if (self.plan_snapshot is None
                or len(result.candidates) >= len(self.plan_snapshot["candidates"])):
            self.plan_snapshot = {
                "t": round(t, 6),
                "groups": [np.asarray(g.boundary, dtype=float).round(6).tolist()
                           for g in groups],
                "goals": [goal_to_dict(g) for g in goal_sets],
                "candidates": [np.asarray(c.xy, dtype=float).round(6).tolist()
                               for c in result.candidates],
                "selected": sel,
            }
        return len(result.candidates)

    def _soften(self, dyn):
        """A mover already inside its own standoff would make every candidate
        infeasible at the first knot, stalling the tracker exactly when moving
        away matters most. Shrink such a mover's radius until the constraint
        is satisfiable from the current pose; it keeps pushing knots outward
        instead of vanishing."""
        margin = self.config.goal_margin
        out = []
        for c, v, r in dyn:
            dist = float(np.linalg.norm(np.asarray(c, dtype=float) - self.pose.xy))
            if dist <= r + margin + 0.05:
                r = max(dist - margin - 0.05, 0.1)
            out.append((c, v, r))
        return out

    def _dodge(self, groups, dyn, v_cap: float, t: float) -> None:
        """Sidestep when planning failed while a mover closes in on the robot.

        Without a fresh trajectory the tracker brakes to a stop, which is
        exactly wrong when the failure was caused by an approaching obstacle
        passing between robot and goal.
        """
        cfg = self.config
        threat = None
        for c, v, r in dyn:
            rel = np.asarray(c, dtype=float) - self.pose.xy
            relv = np.asarray(v, dtype=float)
            vv = float(relv @ relv)
            tca = float(np.clip(-(rel @ relv) / max(vv, 1e-9), 0.0, 1.0))
            dca = float(np.linalg.norm(rel + tca * relv))
            if dca < r + cfg.robot.footprint_radius + 0.2:
                if threat is None or dca < threat[0]:
                    threat = (dca, rel, relv)
        if threat is None:
            return
        _, rel, relv = threat
        approach = relv if float(relv @ relv) > 1e-12 else rel
        perp = np.array([-approach[1], approach[0]])
        perp = perp / max(float(np.linalg.norm(perp)), 1e-9)
        if float(perp @ rel) > 0:  # step to the side the mover is not on
            perp = -perp
        target = self.pose.xy + 0.9 * perp
        avoidable = self._soften(dyn)
        try:
            result = straight_plan(self.pose, target, groups, avoidable,
                                   cfg.robot.v_max_physical,
                                   cfg.robot.a_max, cfg.goal_margin,
                                   cfg.optimizer)
        except FollowSimError:
            return
        if result.best is not None:
            self.trajectory = result.best
            self.traj_start = t

    # ---------- control ----------

    def _track_trajectory(self, v_cap: float):
        cfg = self.config
        traj = self.trajectory
        if traj is None:
            return 0.0, 0.0
        tau = self.world.t - self.traj_start
        target = traj.point_at_time(tau + cfg.lookahead)
        to_target = target - self.pose.xy
        dist = float(np.linalg.norm(to_target))
        if dist < 0.03:
            return 0.0, 0.0
        bearing = float(np.arctan2(to_target[1], to_target[0]))
        err = wrap_angle(bearing - self.pose.theta)
        if abs(err) > np.pi / 2:
            err = wrap_angle(err + np.pi)
            direction = -1.0
        else:
            direction = 1.0
        v_des = direction * min(v_cap, dist / cfg.lookahead) * max(0.0, np.cos(err))
        omega = float(np.clip(cfg.k_heading * err, -cfg.robot.omega_max,
                              cfg.robot.omega_max))
        return v_des, omega

    def _pursuit_control(self, p_ref, identified: bool, v_cap: float):
        cfg = self.config
        if p_ref is None:
            return 0.0, 0.0
        to_leader = np.asarray(p_ref) - self.pose.xy
        dist = float(np.linalg.norm(to_leader))
        bearing = float(np.arctan2(to_leader[1], to_leader[0]))
        err = wrap_angle(bearing - self.pose.theta)
        omega = float(np.clip(cfg.k_heading * err, -cfg.robot.omega_max,
                              cfg.robot.omega_max))
        v_des = cfg.pursuit_gain * (dist - cfg.pursuit_standoff)
        v_des = float(np.clip(v_des, -v_cap, v_cap))
        if abs(err) > 1.2:
            v_des = 0.0
        if not identified and self.world.t - self.last_identified > cfg.id_hold:
            v_des = 0.0
        return v_des, omega

    # ---------- main tick ----------

    def update(self, dt: float) -> dict:
        cfg = self.config
        t = self.world.t
        scan, obs = sense(self.world, self.pose, cfg.sensor)
        self.history.append((t, obs))

        identified, matched, score = self._perceive(obs, t, dt)

        # reference leader estimate for goals and flags
        p_ref = None
        v_ref = np.zeros(2)
        if identified:
            try:
                p_ref, v_ref = leader_mean_state(self.history, cfg.mean_window)
            except NoVisibleLeader:
                p_ref = self.track.position if self.track is not None else None
        elif self.track is not None and self.track.last_seen_pose is not None:
            last = self.track.last_seen_pose
            p_ref = np.array([last.x, last.y])

        d_t = safe_distance(self.track.nis if self.track is not None else 0.0,
                            cfg.adaptation)
        distance = (float(np.linalg.norm(p_ref - self.pose.xy))
                    if p_ref is not None else np.inf)
        in_costmap = (p_ref is not None
                      and float(np.max(np.abs(p_ref - self.pose.xy)))
                      <= cfg.costmap.width / 2.0)
        approaching = False
        if identified and distance < cfg.adaptation.retreat_range_factor * d_t:
            closing = float(v_ref @ (self.pose.xy - p_ref)) / max(distance, 1e-6)
            approaching = closing > cfg.adaptation.retreat_speed

        flags = TransitionFlags(
            identified=identified,
            ever_identified=self.ever_identified,
            has_estimate=p_ref is not None,
            in_costmap=in_costmap,
            leader_approaching=approaching,
            new_leader_command=self.new_leader_command,
            distance=distance,
        )
        state = self.machine.update(flags, t)
        if state == FollowState.SWITCHING and self.new_leader_command:
            self._reset_identity()
            self.new_leader_command = False
        self.state = state

        leader_speed = float(np.linalg.norm(v_ref))
        v_cap = speed_cap(state, leader_speed, distance,
                          cfg.robot.v_max_physical, cfg.adaptation)

        n_candidates = 0
        replanned = False
        if cfg.variant == "baseline_pursuit":
            v_des, omega = self._pursuit_control(p_ref, identified, v_cap)
        else:
            due = (self.trajectory is None
                   or t - self.last_replan >= cfg.replan_interval
                   or state != self.last_planned_state)
            if due and state != FollowState.SWITCHING:
                n_candidates = self._replan(state, scan, obs, p_ref, v_ref,
                                            d_t, v_cap, t)
                self.last_replan = t
                self.last_planned_state = state
                replanned = True
            if state == FollowState.SWITCHING:
                self.trajectory = None
            v_des, omega = self._track_trajectory(v_cap)

        # acceleration-limited velocity, then unicycle integration
        dv = np.clip(v_des - self.v_cmd, -cfg.robot.a_max * dt, cfg.robot.a_max * dt)
        self.v_cmd = float(self.v_cmd + dv)
        self.omega_cmd = omega
        theta = wrap_angle(self.pose.theta + omega * dt)
        x = self.pose.x + self.v_cmd * np.cos(theta) * dt
        y = self.pose.y + self.v_cmd * np.sin(theta) * dt
        self.pose = Pose(x, y, theta)

        leader_true = self.world.leader_pose()
        true_dist = float(np.linalg.norm(leader_true.xy - self.pose.xy))
        collided = (self.world.check_collision(self.pose.xy, cfg.robot.footprint_radius)
                    or true_dist < cfg.robot.footprint_radius + self.world.leader_radius)
        if collided:
            self.collisions += 1
        return {
            "t": round(t, 6),
            "robot": [round(x, 6), round(y, 6), round(theta, 6)],
            "v": round(self.v_cmd, 6),
            "omega": round(self.omega_cmd, 6),
            "leader": [round(leader_true.x, 6), round(leader_true.y, 6),
                       round(leader_true.theta, 6)],
            "state": state.value,
            "identified": bool(identified),
            "matched": bool(matched),
            "match_score": None if score is None else round(float(score), 6),
            "visible_fraction": round(float(obs.visible_fraction), 6),
            "distance": round(true_dist, 6),
            "nis": round(float(self.track.nis), 6) if self.track is not None else None,
            "safe_distance": round(d_t, 6),
            "v_cap": round(v_cap, 6),
            "candidates": int(n_candidates),
            "replanned": bool(replanned),
            "collided": bool(collided),
        }
