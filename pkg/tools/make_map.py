#!/usr/bin/env python3
"""Generate the shipped suburban map extract (scenarios/suburb.osm).

Layout: a 4x4 grid of residential streets at 150 m spacing centered on the
projection anchor, with 36 buildings (heights 6..24 m) filling the nine inner
blocks. Deterministic: rerunning reproduces the identical file.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

LAT0, LON0 = 51.4920, 7.4150
EARTH_RADIUS_M = 6378137.0
GRID_LINES = (-225.0, -75.0, 75.0, 225.0)
BLOCK_CENTERS = (-150.0, 0.0, 150.0)
BUILDING_HALF_W = 20.0  # along x
BUILDING_HALF_H = 13.0  # along y
BUILDING_OFFSET = 37.0  # sub-block center displacement inside each block
HEIGHT_CHOICES = (6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0)


def to_latlon(x: float, y: float) -> tuple[float, float]:
    kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(LAT0))
    ky = math.radians(1.0) * EARTH_RADIUS_M
    return (LAT0 + y / ky, LON0 + x / kx)


def main() -> None:
    rng = np.random.Generator(np.random.Philox(42))
    nodes: list[tuple[int, float, float]] = []  # (id, x, y)
    lines: list[str] = []

    node_id = 0

    def add_node(x: float, y: float) -> int:
        nonlocal node_id
        node_id += 1
        nodes.append((node_id, x, y))
        return node_id

    # intersections: id = 1 + i*4 + j for x index i, y index j
    grid_ids = {}
    for i, x in enumerate(GRID_LINES):
        for j, y in enumerate(GRID_LINES):
            grid_ids[(i, j)] = add_node(x, y)

    ways: list[tuple[int, list[int], list[tuple[str, str]]]] = []
    way_id = 100
    for j in range(4):  # horizontal streets
        for i in range(3):
            ways.append((way_id, [grid_ids[(i, j)], grid_ids[(i + 1, j)]],
                         [("highway", "residential"), ("maxspeed", "50")]))
            way_id += 1
    for i in range(4):  # vertical streets
        for j in range(3):
            ways.append((way_id, [grid_ids[(i, j)], grid_ids[(i, j + 1)]],
                         [("highway", "residential"), ("maxspeed", "50")]))
            way_id += 1

    way_id = 5000
    for bx in BLOCK_CENTERS:
        for by in BLOCK_CENTERS:
            for sx in (-1.0, 1.0):
                for sy in (-1.0, 1.0):
                    cx = bx + sx * BUILDING_OFFSET
                    cy = by + sy * BUILDING_OFFSET
                    corners = [
                        (cx - BUILDING_HALF_W, cy - BUILDING_HALF_H),
                        (cx + BUILDING_HALF_W, cy - BUILDING_HALF_H),
                        (cx + BUILDING_HALF_W, cy + BUILDING_HALF_H),
                        (cx - BUILDING_HALF_W, cy + BUILDING_HALF_H),
                    ]
                    ids = [add_node(x, y) for x, y in corners]
                    height = HEIGHT_CHOICES[int(rng.integers(0, len(HEIGHT_CHOICES)))]
                    levels = int(height / 3.0)
                    ways.append((way_id, ids + [ids[0]],
                                 [("building", "yes"), ("building:levels", str(levels))]))
                    way_id += 1

    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append('<osm version="0.6" generator="make_map">')
    dlat, _ = to_latlon(0.0, 320.0)
    _, dlon = to_latlon(320.0, 0.0)
    lines.append(
        f'  <bounds minlat="{2 * LAT0 - dlat:.7f}" minlon="{2 * LON0 - dlon:.7f}" '
        f'maxlat="{dlat:.7f}" maxlon="{dlon:.7f}"/>'
    )
    for nid, x, y in nodes:
        lat, lon = to_latlon(x, y)
        lines.append(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}"/>')
    for wid, refs, tags in ways:
        lines.append(f'  <way id="{wid}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        for k, v in tags:
            lines.append(f'    <tag k="{k}" v="{v}"/>')
        lines.append("  </way>")
    lines.append("</osm>")

    out = Path(__file__).resolve().parent.parent / "scenarios" / "suburb.osm"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(nodes)} nodes, {len(ways)} ways)")


if __name__ == "__main__":
    main()
