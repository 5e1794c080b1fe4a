"""Static SVG rendering of a recorded run: arena, paths, follow-state strip."""

from __future__ import annotations

import numpy as np

from .errors import IoError

STATE_COLORS = {
    "following": "#2a9d4e",
    "chasing": "#e09f1f",
    "planning": "#7048c8",
    "retreating": "#d0453a",
    "switching": "#3a78c9",
}

_OBSTACLE_FILL = {"static": "#8a8f98", "dynamic": "#e0893a", "overflyable": "#c9ccd4"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    """Maps world coordinates into a y-flipped pixel frame."""

    def __init__(self, bounds, px_per_m: float = 40.0, pad: float = 0.5,
                 strip: int = 26):
        xmin, ymin, xmax, ymax = bounds
        self.xmin, self.ymax = xmin - pad, ymax + pad
        self.s = px_per_m
        self.w = int(np.ceil((xmax - xmin + 2 * pad) * px_per_m))
        self.h = int(np.ceil((ymax - ymin + 2 * pad) * px_per_m))
        self.strip = strip

    def pt(self, x: float, y: float) -> tuple:
        return ((x - self.xmin) * self.s, (self.ymax - y) * self.s)

    def path(self, pts) -> str:
        return " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in
                        (self.pt(x, y) for x, y in pts))


def _draw_snapshot(cv: _Canvas, snapshot: dict, out: list) -> None:
    """Overlay from the last recorded replan: obstacle hulls the planner saw,
    the goal sets it aimed for, and every retained candidate trajectory."""
    for hull in snapshot.get("groups", ()):
        out.append(f'<polygon points="{cv.path(hull)}" fill="none" '
                   f'stroke="#4a6fa5" stroke-width="1.2" stroke-dasharray="3,3"/>')
    for goal in snapshot.get("goals", ()):
        if goal["kind"] == "point":
            px, py = cv.pt(goal["position"][0], goal["position"][1])
            out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" '
                       f'r="{_fmt(goal["eps"] * cv.s)}" fill="none" '
                       f'stroke="#1f7a6d" stroke-width="1.4" '
                       f'stroke-dasharray="4,3"/>')
        elif goal["kind"] == "line":
            out.append(f'<polyline points="{cv.path([goal["p1"], goal["p2"]])}" '
                       f'fill="none" stroke="#1f7a6d" stroke-width="2.5" '
                       f'stroke-dasharray="4,3"/>')
        elif goal["kind"] == "arc":
            cx, cy = goal["center"]
            rad, a0 = goal["radius"], goal["ang_from"]
            angs = np.linspace(a0, a0 + goal["span"], 24)
            pts = [(cx + rad * np.cos(a), cy + rad * np.sin(a)) for a in angs]
            out.append(f'<polyline points="{cv.path(pts)}" fill="none" '
                       f'stroke="#1f7a6d" stroke-width="2.5" '
                       f'stroke-dasharray="4,3"/>')
    selected = snapshot.get("selected", 0)
    for i, cand in enumerate(snapshot.get("candidates", ())):
        if i == selected:
            style = 'stroke="#16324f" stroke-width="2.4"'
        else:
            style = 'stroke="#9bb3cc" stroke-width="1.3"'
        out.append(f'<polyline class="candidate" points="{cv.path(cand)}" '
                   f'fill="none" {style}/>')


def render_trace_svg(episode, rows: list, path: str, snapshot=None) -> None:
    """Draw the arena, both paths colored by follow state, and a state strip."""
    if not rows:
        raise IoError("cannot render an empty trace")
    world = episode.world
    cv = _Canvas(world.bounds)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{cv.w}" height="{cv.h + cv.strip + 8}" '
        f'viewBox="0 0 {cv.w} {cv.h + cv.strip + 8}">',
        f'<rect width="{cv.w}" height="{cv.h}" fill="#f6f7f9" stroke="#444"/>',
    ]

    # lighting regions, faint yellow where brighter than the rest
    for rect, factor in episode.lighting.regions:
        if factor >= 0.99:
            x0, y0, x1, y1 = rect
            px, py = cv.pt(x0, y1)
            out.append(
                f'<rect x="{_fmt(px)}" y="{_fmt(py)}" '
                f'width="{_fmt((x1 - x0) * cv.s)}" height="{_fmt((y1 - y0) * cv.s)}" '
                f'fill="#f9eab0" opacity="0.6"/>')

    for ob in world.obstacles:
        fill = _OBSTACLE_FILL.get(ob.kind, "#8a8f98")
        if ob.is_disc:
            px, py = cv.pt(ob.center[0], ob.center[1])
            out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" '
                       f'r="{_fmt(ob.radius * cv.s)}" fill="{fill}" opacity="0.85"/>')
        else:
            out.append(f'<polygon points="{cv.path(ob.vertices)}" '
                       f'fill="{fill}" opacity="0.85"/>')

    if snapshot is not None:
        _draw_snapshot(cv, snapshot, out)

    # leader path, dashed grey
    leader_pts = [(r["leader"][0], r["leader"][1]) for r in rows]
    out.append(f'<polyline points="{cv.path(leader_pts)}" fill="none" '
               f'stroke="#666" stroke-width="1.5" stroke-dasharray="6,4"/>')

    # robot path split into same-state segments so each gets its state color
    i = 0
    while i < len(rows):
        j = i
        state = rows[i]["state"]
        while j + 1 < len(rows) and rows[j + 1]["state"] == state:
            j += 1
        seg = [(r["robot"][0], r["robot"][1]) for r in rows[i:j + 2]]
        color = STATE_COLORS.get(state, "#333")
        out.append(f'<polyline points="{cv.path(seg)}" fill="none" '
                   f'stroke="{color}" stroke-width="2.2"/>')
        i = j + 1

    # collision ticks
    for r in rows:
        if r["collided"]:
            px, py = cv.pt(r["robot"][0], r["robot"][1])
            out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" '
                       f'fill="none" stroke="#d0453a" stroke-width="1.5"/>')

    # start and end markers
    for pts, label in ((rows[0], "R0"), (rows[-1], "R1")):
        px, py = cv.pt(pts["robot"][0], pts["robot"][1])
        out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="5" fill="#222"/>')
        out.append(f'<text x="{_fmt(px + 7)}" y="{_fmt(py + 4)}" '
                   f'font-size="11" font-family="sans-serif">{label}</text>')
    px, py = cv.pt(*leader_pts[-1])
    out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="5" fill="none" '
               f'stroke="#222" stroke-width="2"/>')
    out.append(f'<text x="{_fmt(px + 7)}" y="{_fmt(py + 4)}" '
               f'font-size="11" font-family="sans-serif">L</text>')

    # follow-state strip along the bottom, one cell per tick
    t0, t1 = rows[0]["t"], rows[-1]["t"]
    span = max(t1 - t0, 1e-9)
    y_strip = cv.h + 6
    for i, r in enumerate(rows):
        x0 = (r["t"] - t0) / span * cv.w
        x1 = ((rows[i + 1]["t"] - t0) / span * cv.w) if i + 1 < len(rows) else cv.w
        color = STATE_COLORS.get(r["state"], "#333")
        opacity = "1.0" if r["identified"] else "0.35"
        out.append(f'<rect x="{_fmt(x0)}" y="{y_strip}" '
                   f'width="{_fmt(max(x1 - x0, 0.5))}" height="{cv.strip - 10}" '
                   f'fill="{color}" opacity="{opacity}"/>')
    out.append(f'<text x="2" y="{y_strip + cv.strip - 12}" font-size="9" '
               f'font-family="sans-serif" fill="#555">'
               f't = {t0:.1f} .. {t1:.1f} s (pale = unidentified)</text>')
    out.append("</svg>")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write SVG {path}: {exc}") from exc
