"""Static SVG snapshots of one tick.

The markup is written by hand with fixed number formatting, so identical
records always produce identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Union
from xml.sax.saxutils import escape, quoteattr

from .engine import TickRecord
from .model import RelationState

SCALE = 60.0  # pixels per metre
MARGIN = 1.5  # metres around the scene
FOV_RADIUS = 0.8

STATE_COLORS = {
    RelationState.ENGAGED: "#2e7d32",
    RelationState.BUILDUP: "#ef6c00",
    RelationState.REQUESTED: "#ef6c00",
}
REGION_STYLE = {
    "o-space": ("#e3f2fd", "#1565c0"),
    "p-space": ("none", "#1565c0"),
    "r-space": ("none", "#90a4ae"),
}

STYLE = """
.entity{fill:#ffffff;stroke:#263238;stroke-width:2}
.object{fill:#cfd8dc;stroke:#455a64;stroke-width:2}
.fov{fill:#fff59d;fill-opacity:0.35;stroke:none}
.heading{stroke:#263238;stroke-width:2}
.focus{stroke:#6a1b9a;stroke-width:2;fill:none;marker-end:url(#arrow)}
.link{stroke-width:5;stroke-opacity:0.5;fill:none}
.region{stroke-width:1.5;stroke-dasharray:6 4}
.label{font-family:sans-serif;font-size:12px;fill:#263238;text-anchor:middle}
.title{font-family:sans-serif;font-size:13px;fill:#263238}
""".strip()


def _n(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


class _Frame:
    def __init__(self, record: TickRecord):
        xs, ys = [], []
        for s in record.entities.values():
            x, y = s.pose.position
            xs += [x - FOV_RADIUS, x + FOV_RADIUS]
            ys += [y - FOV_RADIUS, y + FOV_RADIUS]
        for f in record.formations:
            cx, cy = f.o_center
            xs += [cx - f.r_outer_radius, cx + f.r_outer_radius]
            ys += [cy - f.r_outer_radius, cy + f.r_outer_radius]
        if not xs:
            xs, ys = [0.0], [0.0]
        self.xmin, self.xmax = min(xs) - MARGIN, max(xs) + MARGIN
        self.ymin, self.ymax = min(ys) - MARGIN, max(ys) + MARGIN
        self.width = (self.xmax - self.xmin) * SCALE
        self.height = (self.ymax - self.ymin) * SCALE

    def pt(self, p) -> tuple[float, float]:
        # world y grows upward, SVG y grows downward
        return ((p[0] - self.xmin) * SCALE, (self.ymax - p[1]) * SCALE)


def _wedge(frame: _Frame, pos, heading: float, half: float) -> str:
    cx, cy = frame.pt(pos)
    r = FOV_RADIUS * SCALE
    if half >= math.pi - 1e-9:
        return f'<circle class="fov" cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(r)}"/>'
    a0, a1 = heading - half, heading + half
    x0, y0 = frame.pt((pos[0] + FOV_RADIUS * math.cos(a0), pos[1] + FOV_RADIUS * math.sin(a0)))
    x1, y1 = frame.pt((pos[0] + FOV_RADIUS * math.cos(a1), pos[1] + FOV_RADIUS * math.sin(a1)))
    large = 1 if 2 * half > math.pi else 0
    # counter-clockwise in world space is sweep-flag 0 once y is flipped
    return (
        f'<path class="fov" d="M{_n(cx)},{_n(cy)} L{_n(x0)},{_n(y0)} '
        f'A{_n(r)},{_n(r)} 0 {large} 0 {_n(x1)},{_n(y1)} Z"/>'
    )


def _shorten(p, q, by_p: float, by_q: float):
    d = math.dist(p, q)
    if d <= by_p + by_q:
        return p, q
    ux, uy = (q[0] - p[0]) / d, (q[1] - p[1]) / d
    return (p[0] + ux * by_p, p[1] + uy * by_p), (q[0] - ux * by_q, q[1] - uy * by_q)


def render_svg(record: TickRecord, names: Optional[dict[str, str]] = None) -> str:
    names = names or {}
    fr = _Frame(record)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(fr.width)}" height="{_n(fr.height)}" '
        f'viewBox="0 0 {_n(fr.width)} {_n(fr.height)}" data-tick="{record.tick}">',
        f"<style>{STYLE}</style>",
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" '
        'markerHeight="8" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="#6a1b9a"/>'
        "</marker></defs>",
        f'<text class="title" x="8" y="18">tick {record.tick}</text>',
    ]

    out.append('<g id="formations">')
    for i, f in enumerate(record.formations):
        cx, cy = fr.pt(f.o_center)
        for cls, radius in (("r-space", f.r_outer_radius), ("p-space", f.p_outer_radius), ("o-space", f.o_radius)):
            fill, stroke = REGION_STYLE[cls]
            out.append(
                f'<circle class="region {cls}" data-formation="{i}" cx="{_n(cx)}" cy="{_n(cy)}" '
                f'r="{_n(radius * SCALE)}" fill="{fill}" stroke="{stroke}"/>'
            )
    out.append("</g>")

    ents = record.entities
    out.append('<g id="links">')
    done = set()
    for (a, b), state in sorted(record.states.nonpassive().items()):
        key = tuple(sorted((a, b)))
        if key in done or a not in ents or b not in ents:
            continue
        done.add(key)
        if state is not RelationState.ENGAGED:
            state = RelationState.BUILDUP if state is RelationState.REQUESTED else state
        x0, y0 = fr.pt(ents[key[0]].pose.position)
        x1, y1 = fr.pt(ents[key[1]].pose.position)
        out.append(
            f'<line class="link" data-a="{key[0]}" data-b="{key[1]}" data-state="{state.value}" '
            f'x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}" stroke="{STATE_COLORS[state]}"/>'
        )
    out.append("</g>")

    out.append('<g id="entities">')
    for eid, s in sorted(ents.items()):
        pos, h = s.pose.position, s.pose.heading
        if s.engageable:
            out.append(_wedge(fr, pos, h, s.fov_half_angle))
        cx, cy = fr.pt(pos)
        cls = "entity" if s.engageable else "object"
        out.append(
            f'<circle class="{cls}" data-id={quoteattr(eid)} cx="{_n(cx)}" cy="{_n(cy)}" '
            f'r="{_n(s.pose.body_radius * SCALE)}"/>'
        )
        if s.engageable:
            hx, hy = fr.pt((pos[0] + s.pose.body_radius * math.cos(h), pos[1] + s.pose.body_radius * math.sin(h)))
            out.append(f'<line class="heading" x1="{_n(cx)}" y1="{_n(cy)}" x2="{_n(hx)}" y2="{_n(hy)}"/>')
        out.append(
            f'<text class="label" x="{_n(cx)}" y="{_n(cy - s.pose.body_radius * SCALE - 6)}">'
            f"{escape(names.get(eid, eid))}</text>"
        )
    out.append("</g>")

    out.append('<g id="focus">')
    for a, f in sorted(record.focus_map.items()):
        if f == a or a not in ents or f not in ents:
            continue
        p, q = _shorten(
            ents[a].pose.position, ents[f].pose.position,
            ents[a].pose.body_radius, ents[f].pose.body_radius,
        )
        (x0, y0), (x1, y1) = fr.pt(p), fr.pt(q)
        out.append(
            f'<line class="focus" data-from={quoteattr(a)} data-to={quoteattr(f)} '
            f'x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_snapshot(
    record: TickRecord, path: Union[str, Path], names: Optional[dict[str, str]] = None
) -> None:
    Path(path).write_text(render_svg(record, names), encoding="utf-8")
