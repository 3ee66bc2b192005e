"""Top-down orthographic SVG snapshots of the world and vehicle states."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .world import World


@dataclass(frozen=True)
class VehicleGlyph:
    name: str
    x: float
    y: float
    z: float
    heading_rad: float
    kind: str  # "car" | "uav" | "node"


@dataclass(frozen=True)
class LinkGlyph:
    a: tuple[float, float]
    b: tuple[float, float]
    los: bool


def _building_shade(height: float, max_height: float) -> str:
    # taller buildings render darker
    frac = min(height / max_height, 1.0) if max_height > 0 else 0.0
    level = int(210 - 120 * frac)
    return f"rgb({level},{level},{level})"


def render_snapshot(world: World, vehicles: list[VehicleGlyph], time_s: float,
                    links: list[LinkGlyph] = ()) -> str:
    """Deterministic SVG scene: building footprints shaded by height, roads,
    vehicle glyphs with heading, link lines styled by LOS state, and a legend."""
    x0, y0, x1, y1 = world.bounds
    width, height = x1 - x0, y1 - y0
    scale = 900.0 / max(width, height)
    w_px, h_px = width * scale, height * scale

    def px(x: float, y: float) -> tuple[float, float]:
        return ((x - x0) * scale, (y1 - y) * scale)  # flip y for screen coords

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0f}" height="{h_px + 60:.0f}" '
        f'viewBox="0 0 {w_px:.1f} {h_px + 60:.1f}">'
    )
    parts.append(f'<rect x="0" y="0" width="{w_px:.1f}" height="{h_px:.1f}" '
                 'fill="#f4f2ee" stroke="#333" stroke-width="1"/>')

    max_h = world.max_building_height
    for b in sorted(world.buildings, key=lambda b: b.id):
        pts = " ".join(f"{px(p.x, p.y)[0]:.1f},{px(p.x, p.y)[1]:.1f}" for p in b.footprint)
        parts.append(f'<polygon points="{pts}" fill="{_building_shade(b.height, max_h)}" '
                     f'stroke="#777" stroke-width="0.5"><title>building {b.id} h={b.height:g} m</title></polygon>')

    for seg_id in sorted(world.segments):
        seg = world.segments[seg_id]
        pts = " ".join(f"{px(p.x, p.y)[0]:.1f},{px(p.x, p.y)[1]:.1f}" for p in seg.polyline)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#555" stroke-width="2"/>')

    for link in links:
        (ax, ay), (bx, by) = px(*link.a), px(*link.b)
        style = 'stroke="#2a7" stroke-width="1.5"' if link.los else \
                'stroke="#c33" stroke-width="1.5" stroke-dasharray="6,3"'
        parts.append(f'<line x1="{ax:.1f}" y1="{ay:.1f}" x2="{bx:.1f}" y2="{by:.1f}" {style}/>')

    for v in sorted(vehicles, key=lambda v: v.name):
        cx, cy = px(v.x, v.y)
        if v.kind == "car":
            # triangle pointing along the heading
            a = -v.heading_rad  # screen y is flipped
            tip = (cx + 7 * math.cos(a), cy + 7 * math.sin(a))
            left = (cx + 4 * math.cos(a + 2.5), cy + 4 * math.sin(a + 2.5))
            right = (cx + 4 * math.cos(a - 2.5), cy + 4 * math.sin(a - 2.5))
            pts = f"{tip[0]:.1f},{tip[1]:.1f} {left[0]:.1f},{left[1]:.1f} {right[0]:.1f},{right[1]:.1f}"
            parts.append(f'<polygon points="{pts}" fill="#06c"><title>{v.name}</title></polygon>')
        elif v.kind == "uav":
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="5" fill="none" '
                         f'stroke="#d60" stroke-width="2"><title>{v.name} z={v.z:.1f} m</title></circle>')
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="1.5" fill="#d60"/>')
            parts.append(f'<text x="{cx + 7:.1f}" y="{cy - 5:.1f}" font-size="9" '
                         f'fill="#d60">{v.z:.0f} m</text>')
        else:
            parts.append(f'<rect x="{cx - 4:.1f}" y="{cy - 4:.1f}" width="8" height="8" '
                         f'fill="#393"><title>{v.name}</title></rect>')

    legend_y = h_px + 14
    parts.append(f'<text x="8" y="{legend_y:.1f}" font-size="11" fill="#111">'
                 f't = {time_s:.1f} s | triangle: car | ring: aerial vehicle | square: base station | '
                 'solid green link: LOS | dashed red link: NLOS</text>')
    parts.append(f'<text x="8" y="{legend_y + 16:.1f}" font-size="11" fill="#111">'
                 'building shade darkens with height'
                 f' (max {max_h:g} m)</text>')
    parts.append("</svg>")
    return "\n".join(parts)
