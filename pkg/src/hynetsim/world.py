"""OSM-backed world: routable road graph plus buildings as extruded 3D obstacles."""

from __future__ import annotations

import heapq
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .geometry import (
    GeoPoint,
    convex_halfplanes,
    polygon_area,
    polygon_is_simple,
    triangulate,
)

EARTH_RADIUS_M = 6378137.0
DEFAULT_BUILDING_HEIGHT_M = 10.0
METERS_PER_LEVEL = 3.0
DEFAULT_SPEED_MS = 13.9  # 50 km/h fallback for missing/malformed maxspeed
LANE_WIDTH_M = 3.5
GRID_CELL_M = 50.0
BBOX_MARGIN_M = 50.0


class WorldError(ValueError):
    """Raised for malformed OSM input or invalid graph queries."""


class Projection:
    """Local planar projection anchored at the map centroid (equirectangular about lat0)."""

    def __init__(self, lat0: float, lon0: float):
        self.lat0 = lat0
        self.lon0 = lon0
        self._kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
        self._ky = math.radians(1.0) * EARTH_RADIUS_M

    def to_local(self, lat: float, lon: float) -> tuple[float, float]:
        return ((lon - self.lon0) * self._kx, (lat - self.lat0) * self._ky)

    def to_wgs84(self, x: float, y: float) -> tuple[float, float]:
        return (self.lat0 + y / self._ky, self.lon0 + x / self._kx)


@dataclass
class RoadSegment:
    id: str
    node_a: int
    node_b: int
    polyline: list[GeoPoint]
    lane_count: int = 1
    speed_limit: float = DEFAULT_SPEED_MS
    # cumulative arc length at each polyline vertex, [0, ..., length]
    cum_lengths: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.cum_lengths:
            acc = [0.0]
            for i in range(1, len(self.polyline)):
                p, q = self.polyline[i - 1], self.polyline[i]
                acc.append(acc[-1] + math.hypot(q.x - p.x, q.y - p.y))
            self.cum_lengths = acc

    @property
    def length(self) -> float:
        return self.cum_lengths[-1]

    def point_at(self, offset: float, forward: bool = True, lane_shift: float = 0.0) -> GeoPoint:
        """Position at arc-length `offset` measured from node_a (forward) or node_b.

        `lane_shift` displaces the point to the right of the travel direction.
        """
        if not forward:
            offset = self.length - offset
        offset = min(max(offset, 0.0), self.length)
        cl = self.cum_lengths
        lo, hi = 0, len(cl) - 1
        while lo < hi - 1:
            mid = (lo + hi) // 2
            if cl[mid] <= offset:
                lo = mid
            else:
                hi = mid
        p, q = self.polyline[lo], self.polyline[lo + 1]
        seg = cl[lo + 1] - cl[lo]
        t = 0.0 if seg == 0.0 else (offset - cl[lo]) / seg
        x = p.x + t * (q.x - p.x)
        y = p.y + t * (q.y - p.y)
        if lane_shift:
            dx, dy = q.x - p.x, q.y - p.y
            if not forward:
                dx, dy = -dx, -dy
            h = math.hypot(dx, dy)
            if h > 0.0:
                x += dy / h * lane_shift
                y += -dx / h * lane_shift
        return GeoPoint(x, y, 0.0)

    def heading_at(self, offset: float, forward: bool = True) -> float:
        """Travel heading (radians, atan2(dy, dx)) at arc-length offset."""
        if not forward:
            offset = self.length - offset
        cl = self.cum_lengths
        i = 0
        while i < len(cl) - 2 and cl[i + 1] <= offset:
            i += 1
        p, q = self.polyline[i], self.polyline[i + 1]
        dx, dy = q.x - p.x, q.y - p.y
        if not forward:
            dx, dy = -dx, -dy
        return math.atan2(dy, dx)


@dataclass
class Building:
    id: int
    footprint: list[GeoPoint]  # simple, counter-clockwise, z = 0
    height: float
    # convex pieces as inward half-plane lists, precomputed for prism clipping
    pieces: list[list[tuple[float, float, float]]] = field(default_factory=list)
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.pieces:
            self.pieces = [convex_halfplanes(t) for t in triangulate(self.footprint)]
        xs = [p.x for p in self.footprint]
        ys = [p.y for p in self.footprint]
        self.bbox = (min(xs), min(ys), max(xs), max(ys))


class World:
    """Immutable-after-load registry of the road graph, buildings, and spatial index."""

    def __init__(
        self,
        nodes: dict[int, GeoPoint],
        segments: dict[str, RoadSegment],
        buildings: list[Building],
        projection: Projection,
    ):
        self.nodes = nodes
        self.segments = segments
        self.buildings = buildings
        self.projection = projection
        self.adjacency: dict[int, list[str]] = {}
        for seg in segments.values():
            self.adjacency.setdefault(seg.node_a, []).append(seg.id)
            self.adjacency.setdefault(seg.node_b, []).append(seg.id)
        for lst in self.adjacency.values():
            lst.sort()
        xs = [p.x for p in nodes.values()] or [0.0]
        ys = [p.y for p in nodes.values()] or [0.0]
        for b in buildings:
            xs += [b.bbox[0], b.bbox[2]]
            ys += [b.bbox[1], b.bbox[3]]
        self.bounds = (
            min(xs) - BBOX_MARGIN_M,
            min(ys) - BBOX_MARGIN_M,
            max(xs) + BBOX_MARGIN_M,
            max(ys) + BBOX_MARGIN_M,
        )
        self.max_building_height = max((b.height for b in buildings), default=0.0)
        self._grid: dict[tuple[int, int], list[Building]] = {}
        for b in buildings:
            x0, y0, x1, y1 = b.bbox
            for i in range(int(x0 // GRID_CELL_M), int(x1 // GRID_CELL_M) + 1):
                for j in range(int(y0 // GRID_CELL_M), int(y1 // GRID_CELL_M) + 1):
                    self._grid.setdefault((i, j), []).append(b)

    def neighbors(self, node_id: int) -> list[str]:
        return self.adjacency.get(node_id, [])

    def other_end(self, seg: RoadSegment, node_id: int) -> int:
        return seg.node_b if seg.node_a == node_id else seg.node_a

    def shortest_path(self, src: int, dst: int) -> list[RoadSegment]:
        """Minimal-travel-time path (edge weight = length / speed_limit); [] iff unreachable."""
        if src not in self.nodes or dst not in self.nodes:
            raise WorldError(f"unknown node id in shortest_path: {src if src not in self.nodes else dst}")
        if src == dst:
            return []
        dist: dict[int, float] = {src: 0.0}
        prev: dict[int, str] = {}
        heap: list[tuple[float, int]] = [(0.0, src)]
        done: set[int] = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            if u == dst:
                break
            done.add(u)
            for seg_id in self.adjacency.get(u, []):
                seg = self.segments[seg_id]
                v = self.other_end(seg, u)
                nd = d + seg.length / seg.speed_limit
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    prev[v] = seg_id
                    heapq.heappush(heap, (nd, v))
        if dst not in prev:
            return []
        path: list[RoadSegment] = []
        node = dst
        while node != src:
            seg = self.segments[prev[node]]
            path.append(seg)
            node = self.other_end(seg, node)
        path.reverse()
        return path

    def buildings_near(self, a, b) -> list[Building]:
        """Superset of buildings whose prism can intersect segment a->b (broad phase)."""
        if min(a[2], b[2]) > self.max_building_height:
            return []
        i0 = int(min(a[0], b[0]) // GRID_CELL_M)
        i1 = int(max(a[0], b[0]) // GRID_CELL_M)
        j0 = int(min(a[1], b[1]) // GRID_CELL_M)
        j1 = int(max(a[1], b[1]) // GRID_CELL_M)
        seen: dict[int, Building] = {}
        grid = self._grid
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                for bld in grid.get((i, j), ()):
                    seen[bld.id] = bld
        return list(seen.values())

    def contains(self, p) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


def _parse_speed(text: str | None) -> float:
    if not text:
        return DEFAULT_SPEED_MS
    t = text.strip().lower()
    try:
        if t.endswith("mph"):
            return float(t[:-3].strip()) * 0.44704
        if t.endswith("km/h"):
            t = t[:-4].strip()
        return float(t) / 3.6
    except ValueError:
        return DEFAULT_SPEED_MS


def _parse_height(tags: dict[str, str]) -> float:
    h = tags.get("height")
    if h is not None:
        try:
            return float(h.strip().rstrip("m").strip())
        except ValueError:
            pass
    levels = tags.get("building:levels")
    if levels is not None:
        try:
            return float(levels) * METERS_PER_LEVEL
        except ValueError:
            pass
    return DEFAULT_BUILDING_HEIGHT_M


def load_osm(document: bytes | str) -> World:
    """Build a World from an OSM XML v0.6 extract (nodes, ways; highway/building tags)."""
    if isinstance(document, str):
        document = document.encode()
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise WorldError(f"malformed OSM XML at line {exc.position[0]}: {exc.msg}") from exc

    raw_nodes: dict[int, tuple[float, float]] = {}
    for nd in root.iter("node"):
        raw_nodes[int(nd.get("id"))] = (float(nd.get("lat")), float(nd.get("lon")))

    ways: list[tuple[int, list[int], dict[str, str]]] = []
    for way in root.iter("way"):
        refs = [int(nd.get("ref")) for nd in way.findall("nd")]
        tags = {t.get("k"): t.get("v") for t in way.findall("tag")}
        ways.append((int(way.get("id")), refs, tags))

    for way_id, refs, _ in ways:
        for ref in refs:
            if ref not in raw_nodes:
                raise WorldError(f"way {way_id} references missing node {ref}")

    if not raw_nodes:
        raise WorldError("empty road network")
    bounds = root.find("bounds")
    if bounds is not None:
        lat0 = (float(bounds.get("minlat")) + float(bounds.get("maxlat"))) / 2.0
        lon0 = (float(bounds.get("minlon")) + float(bounds.get("maxlon"))) / 2.0
    else:
        lat0 = sum(v[0] for v in raw_nodes.values()) / len(raw_nodes)
        lon0 = sum(v[1] for v in raw_nodes.values()) / len(raw_nodes)
    proj = Projection(lat0, lon0)
    local: dict[int, GeoPoint] = {
        nid: GeoPoint(*proj.to_local(lat, lon)) for nid, (lat, lon) in raw_nodes.items()
    }

    highway_ways = [(wid, refs, tags) for wid, refs, tags in ways if "highway" in tags]
    # Graph nodes: way endpoints plus nodes shared by more than one highway way.
    use_count: dict[int, int] = {}
    for _, refs, _ in highway_ways:
        for ref in refs:
            use_count[ref] = use_count.get(ref, 0) + 1
    graph_nodes: set[int] = set()
    for _, refs, _ in highway_ways:
        graph_nodes.add(refs[0])
        graph_nodes.add(refs[-1])
        for ref in refs[1:-1]:
            if use_count[ref] > 1:
                graph_nodes.add(ref)

    segments: dict[str, RoadSegment] = {}
    for wid, refs, tags in highway_ways:
        speed = _parse_speed(tags.get("maxspeed"))
        start = 0
        part = 0
        for k in range(1, len(refs)):
            if refs[k] in graph_nodes:
                pts = [local[r] for r in refs[start : k + 1]]
                seg = RoadSegment(f"{wid}:{part}", refs[start], refs[k], pts, 1, speed)
                if seg.length > 0.0:
                    segments[seg.id] = seg
                start, part = k, part + 1
    if not segments:
        raise WorldError("empty road network")

    buildings: list[Building] = []
    for wid, refs, tags in ways:
        if "building" not in tags:
            continue
        if len(refs) >= 4 and refs[0] == refs[-1]:
            pts = [local[r] for r in refs[:-1]]
        else:
            pts = [local[r] for r in refs]
        if len(pts) < 3:
            continue
        if polygon_area(pts) < 0:
            pts.reverse()
        if not polygon_is_simple(pts):
            raise WorldError(f"building way {wid} has a self-intersecting footprint")
        height = _parse_height(tags)
        if height <= 0:
            raise WorldError(f"building way {wid} has non-positive height")
        buildings.append(Building(wid, pts, height))

    node_points = {nid: local[nid] for nid in graph_nodes}
    return World(node_points, segments, buildings, proj)


def load_osm_file(path) -> World:
    with open(path, "rb") as fh:
        return load_osm(fh.read())
