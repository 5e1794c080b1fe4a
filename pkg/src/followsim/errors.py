"""Exception types raised across the library."""


class FollowSimError(Exception):
    """Base class for library errors."""


class NoVisibleLeader(FollowSimError):
    """No visible leader observation inside the averaging window."""


class NotVisible(FollowSimError):
    """Embedding requested for an observation with visible=False."""


class EmptyBuffers(FollowSimError):
    """match_leader called while both memory buffers are empty."""


class NumericalFailure(FollowSimError):
    """Innovation covariance not invertible; noise config is broken."""


class NoPath(FollowSimError):
    """No goal node reachable in the topological graph."""


class DegenerateGeometry(FollowSimError):
    """Trajectory point coincides with an obstacle group centroid."""


class Infeasible(FollowSimError):
    """Optimized trajectory fails a hard goal or clearance check."""


class LeaderInsideMap(FollowSimError):
    """Chasing goal requested while the leader is inside the costmap."""


class NoFreeArc(FollowSimError):
    """Entire goal circle is blocked by obstacles."""


class NeverSeen(FollowSimError):
    """Planning goal requested before any leader was ever identified."""


class ConfigError(FollowSimError):
    """Malformed scenario configuration."""


class IoError(FollowSimError):
    """Trace or SVG file could not be written or parsed."""
