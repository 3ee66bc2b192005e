"""Planar/3D geometry primitives: points, polygons, triangulation, segment-prism clipping."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence


class GeoPoint(NamedTuple):
    """Position in the scenario's local planar projection, meters; z is altitude."""

    x: float
    y: float
    z: float = 0.0


Vec3 = tuple[float, float, float]


def vadd(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vscale(a: Sequence[float], s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vnorm(a: Sequence[float]) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vdist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def clamp_norm(a: Sequence[float], cap: float) -> Vec3:
    n = vnorm(a)
    if n <= cap or n == 0.0:
        return (a[0], a[1], a[2])
    s = cap / n
    return (a[0] * s, a[1] * s, a[2] * s)


def polygon_area(pts: Sequence[Sequence[float]]) -> float:
    """Signed area of a 2D polygon (positive = counter-clockwise)."""
    acc = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i][0], pts[i][1]
        x2, y2 = pts[(i + 1) % n][0], pts[(i + 1) % n][1]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_is_simple(pts: Sequence[Sequence[float]]) -> bool:
    """True if no two non-adjacent edges properly intersect. O(n^2), fine for footprints."""
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(a1, a2, pts[j], pts[(j + 1) % n]):
                return False
    return True


def point_in_polygon(x: float, y: float, pts: Sequence[Sequence[float]]) -> bool:
    """Ray-cast parity test; boundary points may land either way."""
    inside = False
    n = len(pts)
    x1, y1 = pts[n - 1][0], pts[n - 1][1]
    for i in range(n):
        x2, y2 = pts[i][0], pts[i][1]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
        x1, y1 = x2, y2
    return inside


def triangulate(pts: Sequence[Sequence[float]]) -> list[tuple[Vec3, ...]]:
    """Ear-clip a simple CCW polygon into triangles (works for concave footprints)."""
    pts2 = [(p[0], p[1]) for p in pts]
    n = len(pts2)
    if n < 3:
        return []
    idx = list(range(n))
    tris: list[tuple] = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3 and guard < 10 * n * n:
        guard += 1
        m = len(idx)
        clipped = False
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = pts2[i0], pts2[i1], pts2[i2]
            if cross(a, b, c) <= 1e-12:
                continue  # reflex or degenerate corner
            ear = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = pts2[j]
                # strict containment test against the candidate ear
                if cross(a, b, p) >= -1e-12 and cross(b, c, p) >= -1e-12 and cross(c, a, p) >= -1e-12:
                    ear = False
                    break
            if ear:
                tris.append((a, b, c))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            break  # degenerate input; keep whatever was clipped
    if len(idx) == 3:
        tris.append((pts2[idx[0]], pts2[idx[1]], pts2[idx[2]]))
    return tris


def convex_halfplanes(tri: Sequence[Sequence[float]]) -> list[tuple[float, float, float]]:
    """Inward half-planes (nx, ny, c) with inside defined by nx*x + ny*y <= c, for a CCW convex polygon."""
    planes = []
    n = len(tri)
    for i in range(n):
        x1, y1 = tri[i][0], tri[i][1]
        x2, y2 = tri[(i + 1) % n][0], tri[(i + 1) % n][1]
        # outward normal of a CCW edge is (dy, -dx)
        nx, ny = (y2 - y1), -(x2 - x1)
        planes.append((nx, ny, nx * x1 + ny * y1))
    return planes


def segment_prism_interval(
    a: Sequence[float],
    b: Sequence[float],
    planes: Sequence[tuple[float, float, float]],
    height: float,
) -> tuple[float, float] | None:
    """Clip segment a->b (3D) against the prism {2D convex region} x [0, height].

    Returns the parameter interval (t0, t1) of the inside portion, or None.
    """
    t0, t1 = 0.0, 1.0
    ax, ay, az = a[0], a[1], a[2]
    dx, dy, dz = b[0] - ax, b[1] - ay, b[2] - az
    for nx, ny, c in planes:
        f0 = nx * ax + ny * ay - c
        df = nx * dx + ny * dy
        if df == 0.0:
            if f0 > 0.0:
                return None
            continue
        t_hit = -f0 / df
        if df > 0.0:  # leaving the half-plane
            if t_hit < t1:
                t1 = t_hit
        else:  # entering
            if t_hit > t0:
                t0 = t_hit
        if t0 >= t1:
            return None
    # z in [0, height]
    if dz == 0.0:
        if az < 0.0 or az > height:
            return None
    else:
        tz0 = (0.0 - az) / dz
        tz1 = (height - az) / dz
        if tz0 > tz1:
            tz0, tz1 = tz1, tz0
        t0 = max(t0, tz0)
        t1 = min(t1, tz1)
        if t0 >= t1:
            return None
    return (t0, t1)
