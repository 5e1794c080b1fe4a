"""Appearance oracle, the two re-identification buffers, and the leader tracker."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import EmptyBuffers, NotVisible, NumericalFailure
from .geometry import Pose, unit

EMBEDDING_DIM = 32


# ---------- domain types ----------

@dataclass
class Embedding:
    vector: np.ndarray  # unit norm
    confidence: float  # in [0, 1]
    distance_at_capture: float
    timestamp: float

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        self.confidence = float(self.confidence)


@dataclass
class TemporalBuffer:
    """Top-n1 highest-confidence embeddings seen so far.

    Entries are sorted descending by confidence; confidence ties rank the
    later timestamp first, which makes the buffer content independent of
    insertion order for a fixed multiset of embeddings.
    """

    capacity: int = 8
    entries: list = field(default_factory=list)


@dataclass
class DistanceFrameBuffer:
    """Per-distance-bin maximum-confidence embeddings.

    Bin i (1-based) covers capture distances [(i-1)*bin_width, i*bin_width);
    distances at or beyond bin_count*bin_width are ignored.
    """

    bin_width: float = 1.0
    bin_count: int = 10
    bins: dict = field(default_factory=dict)  # bin index -> Embedding


@dataclass
class LeaderTrack:
    """Constant-velocity Kalman state (x, y, vx, vy) plus last-seen pose."""

    state: np.ndarray = field(default_factory=lambda: np.zeros(4))
    covariance: np.ndarray = field(default_factory=lambda: np.eye(4) * 10.0)
    nis: float = 0.0
    last_seen_pose: Optional[Pose] = None
    last_seen_time: Optional[float] = None

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)

    @property
    def position(self) -> np.ndarray:
        return self.state[:2].copy()

    @property
    def velocity(self) -> np.ndarray:
        return self.state[2:].copy()


class LightingField:
    """Rectangular lighting regions with a default factor of 1.0."""

    def __init__(self, regions=None):
        # regions: list of ((xmin, ymin, xmax, ymax), factor)
        self.regions = [((float(a), float(b), float(c), float(d)), float(f))
                        for (a, b, c, d), f in (regions or [])]

    def __call__(self, point) -> float:
        x, y = float(point[0]), float(point[1])
        for (xmin, ymin, xmax, ymax), factor in self.regions:
            if xmin <= x <= xmax and ymin <= y <= ymax:
                return factor
        return 1.0


@dataclass
class AppearanceModel:
    """Stands in for a segmentation network's embedding head.

    Partial views blend a clutter direction (occluder and background
    features leaking into the mask) into the identity vector. The clutter
    direction is redrawn per frame, orthogonal to the identity: what leaks
    in depends on what happens to sit behind the leader at that moment, so
    two partial captures do not resemble each other.
    """

    identity_vector: np.ndarray
    lighting_field: LightingField = field(default_factory=LightingField)
    noise_sigma: float = 0.03
    clutter_gain: float = 3.5
    sensor_range: float = 10.0
    rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        self.identity_vector = unit(np.asarray(self.identity_vector, dtype=float))
        if self.rng is None:
            self.rng = np.random.default_rng(0)

    def draw_clutter(self) -> np.ndarray:
        raw = self.rng.normal(size=len(self.identity_vector))
        return unit(raw - (raw @ self.identity_vector) * self.identity_vector)

    @classmethod
    def from_seed(cls, seed: int, dim: int = EMBEDDING_DIM, lighting_field=None,
                  noise_sigma: float = 0.03, clutter_gain: float = 3.5,
                  sensor_range: float = 10.0) -> "AppearanceModel":
        rng = np.random.default_rng(np.random.SeedSequence([88, int(seed)]))
        identity = unit(rng.normal(size=dim))
        return cls(
            identity_vector=identity,
            lighting_field=lighting_field or LightingField(),
            noise_sigma=noise_sigma,
            clutter_gain=clutter_gain,
            sensor_range=sensor_range,
            rng=np.random.default_rng(np.random.SeedSequence([89, int(seed)])),
        )


# ---------- embedding oracle ----------

def range_attenuation(d: float, sensor_range: float = 10.0) -> float:
    """Segmentation quality falloff with distance, clamped to [0.5, 1]."""
    return float(np.clip(1.0 - d / (2.0 * sensor_range), 0.5, 1.0))


def synthesize_embedding(appearance: AppearanceModel, obs, robot_pose: Pose,
                         timestamp: float = 0.0) -> Embedding:
    """Embedding + confidence for a visible leader observation.

    vector = normalize(fraction * lighting * identity + noise) where the
    noise has a structured clutter component growing as sqrt(1 - fraction);
    confidence = fraction * lighting * range_attenuation(distance).
    """
    if not obs.visible:
        raise NotVisible("cannot embed an invisible leader")
    p_mean = obs.point_set.mean(axis=0)
    d = float(np.linalg.norm(p_mean - robot_pose.xy))
    lighting = appearance.lighting_field(p_mean)
    vf = float(obs.visible_fraction)
    clutter_mag = appearance.clutter_gain * np.sqrt(max(0.0, 1.0 - vf))
    clutter = clutter_mag * appearance.draw_clutter() if clutter_mag > 0 else 0.0
    if appearance.noise_sigma > 0:
        jitter = appearance.noise_sigma * appearance.rng.normal(size=len(appearance.identity_vector))
    else:
        jitter = 0.0
    raw = vf * lighting * appearance.identity_vector + clutter + jitter
    norm = float(np.linalg.norm(raw))
    vector = raw / norm if norm > 1e-12 else appearance.identity_vector.copy()
    confidence = float(np.clip(vf * lighting * range_attenuation(d, appearance.sensor_range), 0.0, 1.0))
    return Embedding(vector=vector, confidence=confidence, distance_at_capture=d,
                     timestamp=float(timestamp))


# ---------- buffers ----------

def _rank_key(e: Embedding):
    # descending confidence; ties rank the later timestamp first
    return (-e.confidence, -e.timestamp)


def update_temporal_buffer(buf: TemporalBuffer, e: Embedding) -> TemporalBuffer:
    """New buffer holding the top-n1 of (old entries plus e) by confidence."""
    entries = sorted(buf.entries + [e], key=_rank_key)[: buf.capacity]
    return TemporalBuffer(capacity=buf.capacity, entries=entries)


def update_distance_buffer(buf: DistanceFrameBuffer, e: Embedding) -> DistanceFrameBuffer:
    """New buffer with e competing for its capture-distance bin."""
    if e.distance_at_capture < 0:
        raise ValueError("distance_at_capture must be >= 0")
    i = int(np.floor(e.distance_at_capture / buf.bin_width)) + 1
    bins = dict(buf.bins)
    if i <= buf.bin_count:
        old = bins.get(i)
        if old is None or _rank_key(e) < _rank_key(old):
            bins[i] = e
    return DistanceFrameBuffer(bin_width=buf.bin_width, bin_count=buf.bin_count, bins=bins)


def match_leader(e_query: Embedding, tb: TemporalBuffer, dfb: DistanceFrameBuffer,
                 threshold: float = 0.8):
    """Max cosine similarity of the query against both buffers pooled.

    Returns (matched, score); raises EmptyBuffers when there is nothing to
    match against.
    """
    if not (0 < threshold < 1):
        raise ValueError("threshold must be in (0, 1)")
    vectors = [e.vector for e in tb.entries] + [e.vector for e in dfb.bins.values()]
    if not vectors:
        raise EmptyBuffers("both buffers are empty")
    mat = np.stack(vectors)
    q = unit(e_query.vector)
    norms = np.linalg.norm(mat, axis=1)
    sims = (mat @ q) / np.maximum(norms, 1e-12)
    score = float(sims.max())
    return score >= threshold, score


def buffers_to_json(tb: TemporalBuffer, dfb: DistanceFrameBuffer) -> str:
    """Debug dump: per-entry and per-bin confidence and timestamps."""
    payload = {
        "temporal": [
            {"confidence": e.confidence, "timestamp": e.timestamp,
             "distance_at_capture": e.distance_at_capture}
            for e in tb.entries
        ],
        "distance_bins": {
            str(i): {"confidence": e.confidence, "timestamp": e.timestamp,
                     "distance_at_capture": e.distance_at_capture}
            for i, e in sorted(dfb.bins.items())
        },
    }
    return json.dumps(payload, sort_keys=True)


# ---------- Kalman tracker ----------

def white_accel_q(dt: float, sigma_a: float) -> np.ndarray:
    """Process noise for a constant-velocity model driven by white acceleration."""
    q11 = dt**4 / 4.0
    q13 = dt**3 / 2.0
    q33 = dt**2
    base = np.array([
        [q11, 0.0, q13, 0.0],
        [0.0, q11, 0.0, q13],
        [q13, 0.0, q33, 0.0],
        [0.0, q13, 0.0, q33],
    ])
    return sigma_a**2 * base


def compute_nis(innovation: np.ndarray, s_matrix: np.ndarray) -> float:
    """Normalized innovation squared nu^T S^-1 nu."""
    nu = np.asarray(innovation, dtype=float)
    s = np.asarray(s_matrix, dtype=float)
    try:
        L = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("innovation covariance not positive-definite") from exc
    z = np.linalg.solve(L, nu)
    return float(z @ z)


def kf_predict_update(track: LeaderTrack, measurement, dt: float, q, r) -> LeaderTrack:
    """Constant-velocity predict, then a position update when a measurement exists.

    q may be a 4x4 covariance or a scalar white-acceleration sigma; r may be
    a 2x2 covariance or a scalar standard deviation. Without a measurement
    only the prediction runs: covariance grows, last_seen fields untouched.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    q_mat = white_accel_q(dt, float(q)) if np.ndim(q) == 0 else np.asarray(q, dtype=float)
    r_mat = float(r) ** 2 * np.eye(2) if np.ndim(r) == 0 else np.asarray(r, dtype=float)
    f = np.eye(4)
    f[0, 2] = dt
    f[1, 3] = dt
    h = np.zeros((2, 4))
    h[0, 0] = 1.0
    h[1, 1] = 1.0
    x = f @ track.state
    p = f @ track.covariance @ f.T + q_mat
    nis = track.nis
    if measurement is not None:
        z = np.asarray(measurement, dtype=float)
        nu = z - h @ x
        s = h @ p @ h.T + r_mat
        nis = compute_nis(nu, s)
        k = p @ h.T @ np.linalg.inv(s)
        x = x + k @ nu
        ikh = np.eye(4) - k @ h
        p = ikh @ p @ ikh.T + k @ r_mat @ k.T  # Joseph form keeps P symmetric PD
    return LeaderTrack(state=x, covariance=p, nis=nis,
                       last_seen_pose=track.last_seen_pose,
                       last_seen_time=track.last_seen_time)


def record_last_seen(track: LeaderTrack, p_mean: np.ndarray, v_mean: np.ndarray,
                     t: float) -> LeaderTrack:
    """Store the last-seen pose; heading comes from the velocity direction.

    Below 0.05 m/s the previous heading is held (a stationary leader has no
    meaningful motion direction).
    """
    v = np.asarray(v_mean, dtype=float)
    if np.linalg.norm(v) < 0.05 and track.last_seen_pose is not None:
        theta = track.last_seen_pose.theta
    elif np.linalg.norm(v) < 0.05:
        theta = 0.0
    else:
        theta = float(np.arctan2(v[1], v[0]))
    pose = Pose(float(p_mean[0]), float(p_mean[1]), theta)
    return replace(track, last_seen_pose=pose, last_seen_time=float(t))
