"""Topological graph over obstacle groups, path enumeration, detour expansion."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .errors import NoPath
from .geometry import (
    hulls_closest,
    point_to_hull,
    polygon_edges,
    polyline_length,
    polyline_self_intersects,
    segment_crosses_hull,
    segments_cross_hull,
    unit,
)
from .goals import goal_nearest_point

ROBOT_NODE = ("robot", 0)


def group_node(gid: int) -> tuple:
    return ("group", gid)


def goal_node(k: int) -> tuple:
    return ("goal", k)


@dataclass
class TopoGraph:
    """Nodes: robot, one per goal set, one per obstacle group.

    Edges hold the shortest collision-free segment between the two nodes'
    boundaries as an (endpoint on first node, endpoint on second node) pair,
    keyed by the node pair in sorted order.
    """

    nodes: dict  # node id -> anchor point (2,)
    groups: dict  # gid -> ObstacleGroup
    goal_sets: list
    edges: dict = field(default_factory=dict)

    def neighbors(self, node):
        out = []
        for (a, b), seg in self.edges.items():
            if a == node:
                out.append((b, seg))
            elif b == node:
                out.append((a, (seg[1], seg[0])))
        return sorted(out, key=lambda item: repr(item[0]))

    def edge_between(self, a, b):
        if (a, b) in self.edges:
            return self.edges[(a, b)]
        pa, pb = self.edges[(b, a)]
        return pb, pa


def _boundary_of(node, graph_nodes, groups):
    kind, idx = node
    if kind == "group":
        return groups[idx].boundary
    return graph_nodes[node][None, :]  # robot and goal nodes are points


def build_graph(groups, robot_pose, goal_sets) -> TopoGraph:
    """Connect robot, goal, and group nodes by shortest collision-free segments.

    A candidate edge is the shortest segment between the two boundaries; it
    is kept only when it crosses no other group's hull interior. Goal nodes
    are anchored at each goal set's nearest point to the robot.
    """
    robot_xy = robot_pose.xy if hasattr(robot_pose, "xy") else np.asarray(robot_pose, dtype=float)
    nodes = {ROBOT_NODE: robot_xy}
    group_map = {}
    for g in groups:
        nodes[group_node(g.id)] = np.asarray(g.centroid, dtype=float)
        group_map[g.id] = g
    for k, goal in enumerate(goal_sets):
        nodes[goal_node(k)] = goal_nearest_point(goal, robot_xy)

    node_ids = sorted(nodes, key=repr)
    edges = {}
    for i, na in enumerate(node_ids):
        for nb in node_ids[i + 1:]:
            kinds = {na[0], nb[0]}
            if kinds == {"goal"} or kinds == {"robot", "robot"}:
                continue  # paths terminate at a goal; no goal-goal edges
            ba = _boundary_of(na, nodes, group_map)
            bb = _boundary_of(nb, nodes, group_map)
            if len(ba) == 1 and len(bb) == 1:
                pa, pb = ba[0], bb[0]
                dist = float(np.linalg.norm(pa - pb))
            elif len(ba) == 1:
                pb, dist = point_to_hull(ba[0], bb)
                pa = ba[0]
            elif len(bb) == 1:
                pa, dist = point_to_hull(bb[0], ba)
                pa, pb = pa, bb[0]
            else:
                pa, pb, dist = hulls_closest(ba, bb)
            if na[0] == "group" and nb[0] == "group" and dist < 1e-9:
                continue  # overlapping hulls leave no gap to pass through
            blocked = False
            for g in groups:
                if group_node(g.id) in (na, nb):
                    continue
                if len(g.boundary) >= 3 and segment_crosses_hull(pa, pb, g.boundary):
                    blocked = True
                    break
            if not blocked:
                edges[(na, nb)] = (np.asarray(pa, dtype=float), np.asarray(pb, dtype=float))
    return TopoGraph(nodes=nodes, groups=group_map, goal_sets=list(goal_sets), edges=edges)


@dataclass
class GeneralizedTrajectory:
    """A simple robot-to-goal path through the graph, before detour choice."""

    nodes: list  # [robot, group..., goal]
    contacts: list  # per hop, (point on from-node, point on to-node)
    detour_choices: Optional[tuple] = None  # per group node, +1 ccw / -1 cw

    @property
    def group_ids(self):
        return [idx for kind, idx in self.nodes if kind == "group"]

    @property
    def goal_index(self) -> int:
        return self.nodes[-1][1]


def enumerate_generalized(graph: TopoGraph, depth_limit: int = 3) -> list:
    """All simple robot-to-goal paths with at most depth_limit group nodes."""
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    found = []

    def dfs(node, visited, path_nodes, path_contacts, depth):
        for neighbor, seg in graph.neighbors(node):
            kind = neighbor[0]
            if kind == "goal":
                found.append(GeneralizedTrajectory(
                    nodes=path_nodes + [neighbor],
                    contacts=path_contacts + [seg],
                ))
            elif kind == "group" and depth < depth_limit and neighbor not in visited:
                dfs(neighbor, visited | {neighbor}, path_nodes + [neighbor],
                    path_contacts + [seg], depth + 1)

    dfs(ROBOT_NODE, {ROBOT_NODE}, [ROBOT_NODE], [], 0)
    if not found:
        raise NoPath("no goal node reachable in the topological graph")
    return found


# ---------- detour expansion ----------

def _locate_on_hull(point: np.ndarray, hull: np.ndarray) -> tuple:
    """(edge index, param) of the hull boundary point nearest to `point`."""
    a, b = polygon_edges(hull)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.where(dd > 1e-18,
                 np.clip(((point[None, :] - a) * d).sum(axis=1) / np.maximum(dd, 1e-18),
                         0.0, 1.0),
                 0.0)
    q = a + t[:, None] * d
    dist = np.linalg.norm(point[None, :] - q, axis=1)
    e = int(np.argmin(dist))
    return e, float(t[e])


def _walk_boundary(hull: np.ndarray, entry: np.ndarray, exit_: np.ndarray,
                   ccw: bool) -> np.ndarray:
    """Boundary points from entry to exit going counterclockwise or clockwise."""
    k = len(hull)
    if k == 1:
        return hull[:1].copy()
    if k == 2:
        return np.array([entry, exit_])
    e_in, t_in = _locate_on_hull(entry, hull)
    e_out, t_out = _locate_on_hull(exit_, hull)
    pts = [entry]
    if ccw:
        edge = e_in
        t = t_in
        while not (edge == e_out and t <= t_out + 1e-9):
            edge_next = (edge + 1) % k
            pts.append(hull[edge_next])
            edge, t = edge_next, 0.0
            if len(pts) > k + 2:
                break
    else:
        edge = e_in
        t = t_in
        while not (edge == e_out and t >= t_out - 1e-9):
            pts.append(hull[edge])
            edge = (edge - 1) % k
            t = 1.0
            if len(pts) > k + 2:
                break
    pts.append(exit_)
    arr = np.asarray(pts)
    d = np.diff(arr, axis=0)
    return arr[np.concatenate([[True], (d * d).sum(axis=1) > 1e-18])]


def _offset_from_hull(points: np.ndarray, hull_centroid: np.ndarray,
                      offset: float) -> np.ndarray:
    if offset <= 0:
        return points
    rel = points - hull_centroid[None, :]
    norms = np.maximum(np.linalg.norm(rel, axis=1), 1e-12)[:, None]
    return points + offset * rel / norms


def expand_detours(gt: GeneralizedTrajectory, groups, seed_offset: float = 0.15) -> list:
    """Seed polylines for every clockwise/counterclockwise detour assignment.

    Up to 2^n assignments for n group nodes; polylines that self-intersect
    or cut through any group hull are dropped. Returns a list of
    (polyline, detour_choices) pairs; choices use +1 for counterclockwise.
    """
    group_map = {g.id: g for g in groups}
    gids = gt.group_ids
    hops = []  # (group, entry, exit) per obstacle hop, then ("goal", point)
    for hop, (kind, idx) in enumerate(gt.nodes[1:], start=1):
        entry = gt.contacts[hop - 1][1]
        if kind == "goal":
            hops.append((None, entry, None))
            break
        hops.append((group_map[idx], entry, gt.contacts[hop][0]))
    walk_cache = {}  # the two walks per hop are shared across assignments

    def walk_for(hop_i, ccw):
        key = (hop_i, ccw)
        if key not in walk_cache:
            g, entry, exit_ = hops[hop_i]
            w = _walk_boundary(g.boundary, entry, exit_, ccw=ccw)
            walk_cache[key] = _offset_from_hull(w, g.centroid, seed_offset)
        return walk_cache[key]

    results = []
    for choices in product((1, -1), repeat=len(gids)):
        segs = [gt.contacts[0][0][None, :]]
        for hop_i, (g, entry, _exit) in enumerate(hops):
            if g is None:
                segs.append(entry[None, :])
                break
            segs.append(walk_for(hop_i, choices[hop_i] == 1))
        poly = np.concatenate(segs, axis=0)
        d = np.diff(poly, axis=0)
        poly = poly[np.concatenate([[True], (d * d).sum(axis=1) > 1e-18])]
        if len(poly) < 2:
            continue
        if polyline_self_intersects(poly):
            continue
        collides = False
        for g in groups:
            if len(g.boundary) < 3:
                continue
            if bool(np.any(segments_cross_hull(poly[:-1], poly[1:], g.boundary))):
                collides = True
                break
        if collides:
            continue
        results.append((poly, choices))
    # identical polylines from different labels (e.g. zero-length walks) collapse
    unique = []
    for poly, choices in results:
        dup = False
        for other, _ in unique:
            if len(other) == len(poly) and np.allclose(other, poly, atol=1e-9):
                dup = True
                break
        if not dup:
            unique.append((poly, choices))
    return unique


def seed_length(polyline: np.ndarray) -> float:
    return polyline_length(polyline)
