"""Batch episode execution and the metrics used for comparisons."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agent import AgentConfig, FollowerAgent
from .world import step_world
from .scenarios import (
    REAPPEAR_SCRIPTS,
    SCENARIO_NAMES,
    SCRIPTS_PER_SCENARIO,
    SETTLING_WINDOW,
    Episode,
    build_episode,
    reappear_episode,
)

TICK_DT = 0.1


@dataclass
class EpisodeResult:
    name: str
    variant: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return self.rows[-1]["t"] if self.rows else 0.0


def run_episode(episode: Episode, variant: str = "full",
                config: Optional[AgentConfig] = None,
                dt: float = TICK_DT) -> EpisodeResult:
    """Run one episode to completion and collect the per-tick trace."""
    ep = copy.deepcopy(episode)  # episodes are reusable specs
    cfg = config if config is not None else AgentConfig(variant=variant)
    if config is not None and config.variant != variant:
        cfg = copy.deepcopy(config)
        cfg.variant = variant
    agent = FollowerAgent(ep.world, ep.robot_start, cfg,
                          seed=ep.meta.get("seed", 0), lighting_field=ep.lighting)
    rows = []
    switched = False
    n_ticks = int(round(ep.duration / dt))
    for _ in range(n_ticks):
        step_world(ep.world, dt)
        if ep.switch is not None and not switched and ep.world.t >= ep.switch[0]:
            agent.command_switch(ep.switch[1])
            switched = True
        row = agent.update(dt)
        rows.append(row)
    meta = dict(ep.meta)
    meta["variant"] = variant
    if agent.plan_snapshot is not None:
        meta["plan_snapshot"] = agent.plan_snapshot
    return EpisodeResult(name=ep.name, variant=variant, rows=rows, meta=meta)


# ---------- metrics ----------

def compute_metrics(result: EpisodeResult, d_max: float = 3.0,
                    dt: float = TICK_DT) -> dict:
    """Per-episode terminal record: success flag, collision flag, loss time,
    and the identified-tick distance average.

    Success is judged at the final tick, after the leader has reached its
    target and the settling window has elapsed: the robot must be within
    d_max with the leader identified.
    """
    rows = result.rows
    final = rows[-1]
    success = bool(final["identified"] and final["distance"] <= d_max)
    collision_ticks = sum(1 for r in rows if r["collided"])
    ident = [r for r in rows if r["identified"]]
    loss_time = (len(rows) - len(ident)) * dt
    loss_ratio = (len(rows) - len(ident)) / len(rows)
    if ident:
        avg_distance = float(np.mean([r["distance"] for r in ident]))
        distance_integral = float(sum(r["distance"] for r in ident) * dt)
    else:
        avg_distance = float("nan")
        distance_integral = 0.0
    return {
        "name": result.name,
        "variant": result.variant,
        "success": success,
        "collision": collision_ticks > 0,
        "collision_ticks": collision_ticks,
        "loss_time": loss_time,
        "loss_ratio": loss_ratio,
        "avg_distance": avg_distance,
        "distance_integral": distance_integral,
        "final_distance": final["distance"],
        "duration": final["t"],
    }


def aggregate_metrics(per_episode: list) -> dict:
    """The four comparison metrics over one variant's episodes."""
    n = len(per_episode)
    if n == 0:
        return {"episodes": 0}
    dists = [m["avg_distance"] for m in per_episode
             if np.isfinite(m["avg_distance"])]
    return {
        "episodes": n,
        "follow_success_rate": sum(m["success"] for m in per_episode) / n,
        "avg_leader_loss_ratio": float(np.mean(
            [m["loss_ratio"] for m in per_episode])),
        "collision_rate": sum(m["collision"] for m in per_episode) / n,
        "avg_distance": float(np.mean(dists)) if dists else float("nan"),
    }


# ---------- suites ----------

def run_scenario(scenario: str, variant: str = "full", repeats: int = 4,
                 scripts: Optional[int] = None, dt: float = TICK_DT) -> list:
    """All metric-suite episodes of one scenario under one variant."""
    n_scripts = scripts if scripts is not None else SCRIPTS_PER_SCENARIO
    out = []
    for script in range(n_scripts):
        for repeat in range(repeats):
            ep = build_episode(scenario, script, repeat)
            out.append(compute_metrics(run_episode(ep, variant, dt=dt)))
    return out


def run_ablation_suite(variants=("full", "no_dfb", "no_graph_planner",
                                 "baseline_pursuit"),
                       scenarios=SCENARIO_NAMES, repeats: int = 4,
                       scripts: Optional[int] = None, dt: float = TICK_DT) -> dict:
    """The full comparison table: variants x scenarios, aggregated."""
    table = {}
    for variant in variants:
        per_episode = []
        for scenario in scenarios:
            per_episode.extend(run_scenario(scenario, variant,
                                            repeats=repeats, scripts=scripts,
                                            dt=dt))
        table[variant] = aggregate_metrics(per_episode)
        table[variant + "/episodes"] = per_episode
    return table


def run_reappear_suite(variant: str, repeats: int = 4,
                       scripts: int = REAPPEAR_SCRIPTS,
                       dt: float = TICK_DT) -> list:
    """Leave-and-reappear episodes for the re-identification comparison."""
    out = []
    for script in range(scripts):
        for repeat in range(repeats):
            ep = reappear_episode(script, repeat)
            out.append(compute_metrics(run_episode(ep, variant, dt=dt)))
    return out
