"""Command line front end: run an episode, summarize traces, render SVG."""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys

from .agent import VARIANTS
from .errors import ConfigError, FollowSimError
from .harness import EpisodeResult, aggregate_metrics, compute_metrics, run_episode
from .scenarios import (
    REAPPEAR_SCRIPTS,
    SCENARIO_NAMES,
    SCRIPTS_PER_SCENARIO,
    build_episode,
    load_episode_yaml,
    narrative_episode,
    reappear_episode,
)
from .svg import render_trace_svg
from .traceio import read_trace, write_trace

log = logging.getLogger("followsim")


def _setup_logging() -> None:
    level_name = os.environ.get("FOLLOWSIM_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "error": logging.ERROR}
    if level_name not in levels:
        raise ConfigError(
            f"FOLLOWSIM_LOG must be one of {sorted(levels)}, got {level_name!r}")
    logging.basicConfig(level=levels[level_name],
                        format="%(levelname)s %(name)s: %(message)s")


_BUILTIN_SCENARIOS = list(SCENARIO_NAMES) + ["reappear", "narrative"]


def _episode_from_args(args) -> object:
    if args.seed < 0:
        raise ConfigError("--seed must be >= 0")
    name = args.scenario
    if name not in _BUILTIN_SCENARIOS:
        return load_episode_yaml(name, seed=args.seed)
    if name == "narrative":
        return narrative_episode()
    # one flat seed indexes the (leader script, noise repeat) grid
    scripts = REAPPEAR_SCRIPTS if name == "reappear" else SCRIPTS_PER_SCENARIO
    script, repeat = args.seed % scripts, args.seed // scripts
    if name == "reappear":
        return reappear_episode(script, repeat)
    return build_episode(name, script, repeat)


def _episode_from_meta(meta: dict) -> object:
    scenario = meta.get("scenario")
    if meta.get("source"):
        return load_episode_yaml(meta["source"], seed=meta.get("seed"))
    if scenario == "reappear":
        return reappear_episode(meta.get("script", 0), meta.get("repeat", 0))
    if scenario in SCENARIO_NAMES:
        return build_episode(scenario, meta.get("script", 0),
                             meta.get("repeat", 0))
    if meta.get("name") == "narrative" or scenario == "narrative":
        return narrative_episode()
    raise ConfigError("trace meta does not identify an episode; "
                      "re-run from a YAML file or a built-in scenario")


def _cmd_run(args) -> int:
    episode = _episode_from_args(args)
    log.info("running %s with variant %s", episode.name, args.variant)
    result = run_episode(episode, variant=args.variant)
    metrics = compute_metrics(result)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        meta = dict(result.meta)
        meta.setdefault("name", episode.name)
        meta["cli_seed"] = args.seed
        trace_path = os.path.join(
            args.out, f"{episode.name}-{args.variant}-seed{args.seed:04d}.jsonl")
        write_trace(trace_path, result.rows, meta=meta)
        log.info("trace written to %s", trace_path)
    json.dump(metrics, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _trace_files(paths) -> list:
    files = []
    for path in paths:
        if os.path.isdir(path):
            inside = sorted(glob.glob(os.path.join(path, "*.jsonl")))
            if not inside:
                raise ConfigError(f"no .jsonl traces in directory {path}")
            files.extend(inside)
        else:
            files.append(path)
    return files


def _cmd_metrics(args) -> int:
    per_episode = []
    for path in _trace_files(args.traces):
        meta, rows = read_trace(path)
        result = EpisodeResult(name=meta.get("name", path),
                               variant=meta.get("variant", "unknown"),
                               rows=rows, meta=meta)
        per_episode.append(compute_metrics(result))
    summary = aggregate_metrics(per_episode)
    json.dump({"summary": summary, "episodes": per_episode}, sys.stdout,
              indent=2, sort_keys=True)
    print()
    return 0


def _cmd_render(args) -> int:
    meta, rows = read_trace(args.trace)
    episode = _episode_from_meta(meta)
    render_trace_svg(episode, rows, args.out,
                     snapshot=meta.get("plan_snapshot"))
    log.info("SVG written to %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="followsim",
        description="Leader-following simulator: run episodes, inspect traces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one episode, write a trace")
    p_run.add_argument("--scenario", default="playground",
                       help="episode YAML file or a built-in name "
                            f"({'|'.join(_BUILTIN_SCENARIOS)})")
    p_run.add_argument("--variant", default="full", choices=list(VARIANTS))
    p_run.add_argument("--seed", type=int, default=0,
                       help="episode seed: selects the leader script and "
                            "noise repeat of a built-in scenario, overrides "
                            "the noise seed of a YAML one")
    p_run.add_argument("--out", default=None,
                       help="directory for the trace (JSONL); omit to only "
                            "print metrics")
    p_run.set_defaults(func=_cmd_run)

    p_met = sub.add_parser("metrics", help="summarize recorded traces")
    p_met.add_argument("--traces", nargs="+", required=True,
                       help="trace files or directories of .jsonl traces")
    p_met.set_defaults(func=_cmd_metrics)

    p_ren = sub.add_parser("render", help="draw a recorded trace as SVG")
    p_ren.add_argument("--trace", required=True, help="trace file (JSONL)")
    p_ren.add_argument("--out", required=True, help="SVG output path")
    p_ren.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except FollowSimError as exc:
        print(f"followsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
