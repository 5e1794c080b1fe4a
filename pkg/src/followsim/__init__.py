"""Deterministic 2D leader-following: perception buffers, planning, control."""

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
    transition,
)
from .agent import AgentConfig, FollowerAgent, VARIANTS
from .costmap import Costmap, CostmapConfig, ObstacleGroup, build_costmap, cluster_groups
from .errors import (
    ConfigError,
    DegenerateGeometry,
    EmptyBuffers,
    FollowSimError,
    Infeasible,
    IoError,
    LeaderInsideMap,
    NeverSeen,
    NoFreeArc,
    NoPath,
    NotVisible,
    NoVisibleLeader,
    NumericalFailure,
)
from .geometry import Pose
from .goals import ArcSetGoal, LineSetGoal, PointPoseGoal
from .harness import (
    EpisodeResult,
    aggregate_metrics,
    compute_metrics,
    run_ablation_suite,
    run_episode,
    run_reappear_suite,
    run_scenario,
)
from .homotopy import dedup_by_signature, signature
from .perception import (
    AppearanceModel,
    DistanceFrameBuffer,
    Embedding,
    LeaderTrack,
    LightingField,
    TemporalBuffer,
    kf_predict_update,
    match_leader,
    range_attenuation,
    record_last_seen,
    synthesize_embedding,
    update_distance_buffer,
    update_temporal_buffer,
)
from .planner import PlanResult, PlannerConfig, align_signature, plan, straight_plan
from .scenarios import (
    Episode,
    SCENARIO_NAMES,
    build_episode,
    episode_from_dict,
    load_episode_yaml,
    narrative_episode,
    reappear_episode,
)
from .svg import render_trace_svg
from .traceio import read_trace, write_trace
from .trajopt import (
    ConstraintSet,
    DEFAULT_WEIGHTS,
    OptimizerConfig,
    Trajectory,
    optimize,
    select,
)
from .world import (
    LeaderObservation,
    LeaderScript,
    Obstacle,
    RobotModel,
    SensorModel,
    World,
    leader_mean_state,
    sense,
    step_world,
)

__version__ = "0.1.0"
