"""Candidate generation over the topological graph, and trajectory choice."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateGeometry, Infeasible, NoPath
from .geometry import Pose
from .homotopy import dedup_by_signature, signature as homotopy_signature
from .topograph import build_graph, enumerate_generalized, expand_detours, seed_length
from .trajopt import (
    ConstraintSet,
    OptimizerConfig,
    Trajectory,
    optimize,
    seed_to_trajectory,
    select,
)


@dataclass
class PlannerConfig:
    depth_limit: int = 3
    max_candidates: int = 16
    seed_offset: float = 0.15
    alpha: float = 0.5  # selection hysteresis discount
    literal_similarity: bool = False
    align_tol: float = 0.25  # previous-signature carry-over radius, one cell


@dataclass
class _SeedCandidate:
    polyline: np.ndarray
    goal_index: int
    signature: tuple
    seed_length: float


@dataclass
class PlanResult:
    best: Optional[Trajectory]
    candidates: list = field(default_factory=list)
    seeds: int = 0


def align_signature(prev_signature, prev_centroids, groups, tol: float):
    """Carry the previous selection's signature onto the current groups.

    Groups are matched to the previous tick's by nearest centroid within
    tol; unmatched entries become None, which the selection treats as
    agreement.
    """
    if prev_signature is None or prev_centroids is None or len(prev_centroids) == 0:
        return None
    prev = np.atleast_2d(np.asarray(prev_centroids, dtype=float))
    out = []
    for g in groups:
        d = np.linalg.norm(prev - np.asarray(g.centroid)[None, :], axis=1)
        j = int(np.argmin(d))
        out.append(prev_signature[j] if d[j] <= tol and j < len(prev_signature) else None)
    return tuple(out)


def plan(robot_pose: Pose, goal_sets: list, groups: list,
         dynamic_obstacles: list, v_cap: float, a_max: float, margin: float,
         opt_cfg: OptimizerConfig = None, cfg: PlannerConfig = None,
         previous_signature=None) -> PlanResult:
    """Full planning step: enumerate, expand, dedup, optimize, select.

    Returns a PlanResult whose best is None when every candidate is
    infeasible (callers keep their previous trajectory in that case).
    Raises NoPath when the graph has no robot-to-goal route at all.
    """
    opt_cfg = opt_cfg or OptimizerConfig()
    cfg = cfg or PlannerConfig()
    if not goal_sets:
        raise ValueError("at least one goal set is required")

    graph = build_graph(groups, robot_pose, goal_sets)
    generalized = enumerate_generalized(graph, depth_limit=cfg.depth_limit)

    seeds: list[_SeedCandidate] = []
    for gt in generalized:
        for poly, _choices in expand_detours(gt, groups, seed_offset=cfg.seed_offset):
            if len(poly) < 2:
                continue
            try:
                sig = homotopy_signature(poly, groups) if groups else ()
            except DegenerateGeometry:
                continue
            seeds.append(_SeedCandidate(polyline=poly, goal_index=gt.goal_index,
                                        signature=sig, seed_length=seed_length(poly)))
    seeds = dedup_by_signature(seeds)
    seeds.sort(key=lambda s: s.seed_length)
    seeds = seeds[: cfg.max_candidates]

    survivors = []
    for s in seeds:
        goal = goal_sets[s.goal_index]
        cs = ConstraintSet(static_groups=groups, dynamic_obstacles=dynamic_obstacles,
                           v_cap=v_cap, a_max=a_max, margin=margin, goal=goal)
        seed_traj = seed_to_trajectory(s.polyline, robot_pose.theta, v_cap,
                                       opt_cfg, goal=goal)
        try:
            traj = optimize(seed_traj, cs, opt_cfg)
        except (Infeasible, DegenerateGeometry):
            continue
        if groups and tuple(traj.signature) != tuple(s.signature):
            continue  # optimization jumped to a different homotopy class
        survivors.append(traj)

    if not survivors:
        return PlanResult(best=None, candidates=[], seeds=len(seeds))
    best = select(survivors, previous_signature, alpha=cfg.alpha,
                  literal=cfg.literal_similarity)
    return PlanResult(best=best, candidates=survivors, seeds=len(seeds))


def straight_plan(robot_pose: Pose, target: np.ndarray, groups: list,
                  dynamic_obstacles: list, v_cap: float, a_max: float,
                  margin: float, opt_cfg: OptimizerConfig = None) -> PlanResult:
    """Single straight-seed candidate to a fixed point, no graph, no homotopy.

    The ablated planner: obstacle penalties still apply, but there is no
    detour enumeration and the goal cannot slide along a set.
    """
    from .goals import PointPoseGoal

    opt_cfg = opt_cfg or OptimizerConfig()
    target = np.asarray(target, dtype=float)
    goal = PointPoseGoal(position=target, heading=None, eps=opt_cfg.eps)
    cs = ConstraintSet(static_groups=groups, dynamic_obstacles=dynamic_obstacles,
                       v_cap=v_cap, a_max=a_max, margin=margin, goal=goal)
    poly = np.array([robot_pose.xy, target])
    seed_traj = seed_to_trajectory(poly, robot_pose.theta, v_cap, opt_cfg, goal=goal)
    try:
        traj = optimize(seed_traj, cs, opt_cfg)
    except (Infeasible, DegenerateGeometry):
        return PlanResult(best=None, candidates=[], seeds=1)
    return PlanResult(best=traj, candidates=[traj], seeds=1)
