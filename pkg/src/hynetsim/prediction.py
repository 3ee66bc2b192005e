"""Control-aware position forecasting: route knowledge for cars, steering/waypoint
knowledge for UAVs."""

from __future__ import annotations

import math

from .aerial import Uav
from .geometry import GeoPoint
from .ground import Car

MAX_HORIZON_S = 60.0


def _advance_polyline(points: list[GeoPoint], distance: float) -> GeoPoint:
    """Walk `distance` meters along a polyline; clamps at the final vertex."""
    if not points:
        raise ValueError("empty polyline")
    remaining = distance
    for i in range(1, len(points)):
        p, q = points[i - 1], points[i]
        leg = math.dist(p, q)
        if remaining <= leg:
            if leg == 0.0:
                continue
            t = remaining / leg
            return GeoPoint(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y), p.z + t * (q.z - p.z))
        remaining -= leg
    return points[-1]


def predict_car(car: Car, horizon: float) -> GeoPoint:
    """Constant-speed advance along the car's remaining route polyline.

    Stops at the route end when the horizon overruns it.
    """
    if horizon < 0.0 or horizon > MAX_HORIZON_S:
        raise ValueError(f"horizon {horizon} outside (0, {MAX_HORIZON_S}] s")
    if car.v <= 0.0 or horizon == 0.0:
        return car.segment.point_at(car.offset, car.forward)
    return _advance_polyline(car.remaining_route_points(), car.v * horizon)


def predict_uav(uav: Uav, horizon: float) -> GeoPoint:
    """Waypoint-aware forecast when a mission is known, else second-order
    extrapolation from the current velocity and combined steering vector."""
    if horizon < 0.0 or horizon > MAX_HORIZON_S:
        raise ValueError(f"horizon {horizon} outside (0, {MAX_HORIZON_S}] s")
    role = uav.role
    waypoints = getattr(role, "waypoints", None)
    if waypoints:
        pts = [uav.position] + list(waypoints[uav.waypoint_index:])
        speed = max(uav.speed, 1e-9)
        return _advance_polyline(pts, speed * horizon)

    ax, ay, az = uav.last_steering
    v_max = uav.params.v_max
    vx1 = uav.vx + ax * horizon
    vy1 = uav.vy + ay * horizon
    vz1 = uav.vz + az * horizon
    if (math.sqrt(vx1 * vx1 + vy1 * vy1 + vz1 * vz1) <= v_max
            and uav.speed <= v_max):
        # speed stays inside the envelope over the whole horizon: closed form
        return GeoPoint(
            uav.x + uav.vx * horizon + 0.5 * ax * horizon * horizon,
            uav.y + uav.vy * horizon + 0.5 * ay * horizon * horizon,
            max(0.0, uav.z + uav.vz * horizon + 0.5 * az * horizon * horizon),
        )
    # integrate with the speed clamp active
    dt = 0.05
    x, y, z = uav.x, uav.y, uav.z
    vx, vy, vz = uav.vx, uav.vy, uav.vz
    t = 0.0
    while t < horizon:
        step = min(dt, horizon - t)
        vx += ax * step
        vy += ay * step
        vz += az * step
        s = math.sqrt(vx * vx + vy * vy + vz * vz)
        if s > v_max:
            k = v_max / s
            vx, vy, vz = vx * k, vy * k, vz * k
        x += vx * step
        y += vy * step
        z += vz * step
        t += step
    return GeoPoint(x, y, max(0.0, z))
