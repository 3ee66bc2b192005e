"""UAV agent: role-based action selection, parallel steering behaviors combined by
weighted average, and quadrotor locomotion with propulsion-power accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import GeoPoint, clamp_norm, point_in_polygon, segment_prism_interval

G = 9.80665

ATTITUDE_LIMIT_RAD = math.radians(35.0)
DEFAULT_A_CAP = 8.0  # m/s^2, steering acceleration cap
DEFAULT_V_MAX = 15.0  # m/s

WEIGHT_AVOID = 3.0
WEIGHT_ARRIVE = 1.0
WEIGHT_ALTITUDE = 1.0
WEIGHT_SWARM = 0.5
ARRIVE_SLOWDOWN_M = 10.0
AVOID_LOOKAHEAD_S = 3.0
AVOID_MARGIN_M = 1.0
AVOID_SHELL_M = 8.0  # standoff distance for the wall barrier term


@dataclass(frozen=True)
class AerialSensor:
    """Shadow an assigned ground vehicle from a fixed operating height."""

    target_id: str


@dataclass(frozen=True)
class AerialRelay:
    """Hold a position between a base station and its served users, keeping LOS."""

    base_id: str
    user_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class WaypointMission:
    waypoints: tuple[GeoPoint, ...] = ()


@dataclass(frozen=True)
class PowerParams:
    rotor_count: int = 4
    rotor_area: float = 0.05  # m^2 per rotor disk
    air_density: float = 1.225  # kg/m^3
    profile_power: float = 10.0  # W, avionics + blade profile floor


@dataclass(frozen=True)
class UavParams:
    mass: float = 2.0
    v_max: float = DEFAULT_V_MAX
    a_cap: float = DEFAULT_A_CAP
    tau_attitude: float = 0.2  # s, first-order attitude lag
    drag_coefficient: float = 0.3  # N s/m, linear drag
    power: PowerParams = field(default_factory=PowerParams)
    swarm_radius: float = 0.0  # 0 disables cohesion/separation steerings


@dataclass
class SteeringVector:
    vector: tuple[float, float, float]
    weight: float
    source: str


class Uav:
    """Mutable UAV state; the controller in `uav_command` drives it each mobility tick."""

    __slots__ = (
        "id", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw",
        "role", "operating_height", "params", "thrust", "power_w", "energy_j",
        "_last_power", "attitude_clamped", "waypoint_index", "last_steering",
        "last_accel",
    )

    def __init__(self, uav_id: str, position: GeoPoint, role, operating_height: float = 30.0,
                 params: UavParams | None = None):
        self.id = uav_id
        self.x, self.y, self.z = position
        self.vx = self.vy = self.vz = 0.0
        self.roll = self.pitch = self.yaw = 0.0
        self.role = role
        self.operating_height = operating_height
        self.params = params or UavParams()
        self.thrust = self.params.mass * G
        self.power_w = 0.0
        self.energy_j = 0.0
        self._last_power = None
        self.attitude_clamped = False
        self.waypoint_index = 0
        self.last_steering = (0.0, 0.0, 0.0)
        self.last_accel = (0.0, 0.0, 0.0)

    @property
    def position(self) -> GeoPoint:
        return GeoPoint(self.x, self.y, self.z)

    @property
    def velocity(self) -> tuple[float, float, float]:
        return (self.vx, self.vy, self.vz)

    @property
    def speed(self) -> float:
        return math.sqrt(self.vx * self.vx + self.vy * self.vy + self.vz * self.vz)


# ---------------------------------------------------------------------------
# steering behaviors


def _arrive(uav: Uav, target: GeoPoint, label: str = "arrive") -> SteeringVector:
    dx, dy, dz = target[0] - uav.x, target[1] - uav.y, target[2] - uav.z
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    v_max = uav.params.v_max
    if dist < 1e-9:
        desired = (0.0, 0.0, 0.0)
    else:
        # quadratic speed ramp inside the slow-down radius avoids orbiting a moving target
        speed = v_max if dist >= ARRIVE_SLOWDOWN_M else v_max * (dist / ARRIVE_SLOWDOWN_M) ** 2
        desired = (dx / dist * speed, dy / dist * speed, dz / dist * speed)
    tau = 0.5
    accel = ((desired[0] - uav.vx) / tau, (desired[1] - uav.vy) / tau, (desired[2] - uav.vz) / tau)
    return SteeringVector(clamp_norm(accel, uav.params.a_cap), WEIGHT_ARRIVE, label)


def _hover(uav: Uav) -> SteeringVector:
    tau = 0.5
    return SteeringVector(
        clamp_norm((-uav.vx / tau, -uav.vy / tau, -uav.vz / tau), uav.params.a_cap),
        WEIGHT_ARRIVE,
        "hover",
    )


def _altitude_hold(uav: Uav, height: float) -> SteeringVector:
    kp, kd = 1.0, 2.0
    az = kp * (height - uav.z) - kd * uav.vz
    return SteeringVector(clamp_norm((0.0, 0.0, az), uav.params.a_cap), WEIGHT_ALTITUDE, "altitude_hold")


def _distance_to_footprint(x: float, y: float, footprint) -> tuple[float, float, float]:
    """Distance from (x, y) to the polygon boundary and the outward unit direction."""
    best_d2 = math.inf
    best = (0.0, 1.0, 0.0)
    n = len(footprint)
    for i in range(n):
        ax, ay = footprint[i][0], footprint[i][1]
        bx, by = footprint[(i + 1) % n][0], footprint[(i + 1) % n][1]
        ex, ey = bx - ax, by - ay
        t = ((x - ax) * ex + (y - ay) * ey) / max(ex * ex + ey * ey, 1e-12)
        t = min(1.0, max(0.0, t))
        cx, cy = ax + t * ex, ay + t * ey
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        if d2 < best_d2:
            best_d2 = d2
            d = math.sqrt(d2)
            if d > 1e-9:
                best = ((x - cx) / d, (y - cy) / d, d)
            else:
                best = (0.0, 1.0, 0.0)
    return best


def _collision_avoidance(uav: Uav, world) -> SteeringVector | None:
    """Building avoidance: a velocity-ray anticipation term (scaled by inverse
    time-to-impact) plus a speed-independent standoff barrier near walls."""
    if world is None:
        return None
    pos = (uav.x, uav.y, uav.z)
    shell = AVOID_SHELL_M
    a_cap = uav.params.a_cap
    sx = sy = sz = 0.0

    corner_a = (uav.x - shell, uav.y - shell, uav.z)
    corner_b = (uav.x + shell, uav.y + shell, uav.z)
    for b in world.buildings_near(corner_a, corner_b):
        if uav.z > b.height + AVOID_MARGIN_M + 1.0:
            continue
        ox, oy, dist = _distance_to_footprint(uav.x, uav.y, b.footprint)
        inside = point_in_polygon(uav.x, uav.y, b.footprint)
        if inside:
            sx += ox * a_cap * 2.0
            sy += oy * a_cap * 2.0
            sz += a_cap
        elif dist < shell:
            mag = a_cap * (1.0 - dist / shell) ** 2
            sx += ox * mag
            sy += oy * mag
            sz += 0.2 * mag

    speed = uav.speed
    if speed > 0.1:
        ahead = (uav.x + uav.vx * AVOID_LOOKAHEAD_S,
                 uav.y + uav.vy * AVOID_LOOKAHEAD_S,
                 uav.z + uav.vz * AVOID_LOOKAHEAD_S)
        best_t = None
        for b in world.buildings_near(pos, ahead):
            if min(pos[2], ahead[2]) > b.height + AVOID_MARGIN_M:
                continue
            for planes in b.pieces:
                inflated = [(nx, ny, c + (AVOID_MARGIN_M + 1.0) * math.hypot(nx, ny))
                            for nx, ny, c in planes]
                hit = segment_prism_interval(pos, ahead, inflated, b.height + AVOID_MARGIN_M)
                if hit is not None and (best_t is None or hit[0] < best_t):
                    best_t = hit[0]
        if best_t is not None:
            tti = max(best_t * AVOID_LOOKAHEAD_S, 0.05)
            h = math.hypot(uav.vx, uav.vy)
            if h > 1e-9:
                mag = min(a_cap, speed / tti)
                sx += -uav.vx / h * mag
                sy += -uav.vy / h * mag
                sz += 0.3 * mag

    if sx == 0.0 and sy == 0.0 and sz == 0.0:
        return None
    return SteeringVector(clamp_norm((sx, sy, sz), a_cap), WEIGHT_AVOID, "collision_avoidance")


def _path_following(uav: Uav) -> SteeringVector:
    wps = uav.role.waypoints
    if uav.waypoint_index >= len(wps):
        return _hover(uav)
    target = wps[uav.waypoint_index]
    if math.dist((uav.x, uav.y, uav.z), target) < 2.0:
        uav.waypoint_index += 1
        if uav.waypoint_index >= len(wps):
            return _hover(uav)
        target = wps[uav.waypoint_index]
    return _arrive(uav, target, "path_following")


def _swarm_steerings(uav: Uav, peers: list[Uav]) -> list[SteeringVector]:
    radius = uav.params.swarm_radius
    if radius <= 0.0 or not peers:
        return []
    out: list[SteeringVector] = []
    near = [p for p in peers if p is not uav and math.dist((p.x, p.y, p.z), (uav.x, uav.y, uav.z)) < radius]
    if near:
        cx = sum(p.x for p in near) / len(near) - uav.x
        cy = sum(p.y for p in near) / len(near) - uav.y
        out.append(SteeringVector(clamp_norm((cx * 0.1, cy * 0.1, 0.0), uav.params.a_cap), WEIGHT_SWARM, "cohesion"))
        sep_x = sep_y = 0.0
        for p in near:
            d = math.dist((p.x, p.y), (uav.x, uav.y))
            if 1e-9 < d < radius * 0.3:
                sep_x += (uav.x - p.x) / d / d
                sep_y += (uav.y - p.y) / d / d
        if sep_x or sep_y:
            out.append(SteeringVector(clamp_norm((sep_x * 5.0, sep_y * 5.0, 0.0), uav.params.a_cap),
                                      WEIGHT_SWARM, "separation"))
    return out


def select_behaviors(uav: Uav, world, vehicles: dict) -> list[SteeringVector]:
    """Role-based action selection: returns the active steering vectors for this tick."""
    role = uav.role
    steerings: list[SteeringVector] = []
    degraded = False
    if isinstance(role, AerialSensor):
        target = vehicles.get(role.target_id)
        if target is None:
            degraded = True
        else:
            tp = target.position
            steerings.append(_arrive(uav, GeoPoint(tp.x, tp.y, uav.operating_height)))
            steerings.append(_altitude_hold(uav, uav.operating_height))
    elif isinstance(role, AerialRelay):
        base = vehicles.get(role.base_id)
        users = [vehicles[u] for u in role.user_ids if u in vehicles]
        if base is None:
            degraded = True
        else:
            pts = [base.position] + [u.position for u in users]
            cx = sum(p.x for p in pts) / len(pts)
            cy = sum(p.y for p in pts) / len(pts)
            steerings.append(_arrive(uav, GeoPoint(cx, cy, uav.operating_height), "seek_los_point"))
            steerings.append(_altitude_hold(uav, uav.operating_height))
    elif isinstance(role, WaypointMission):
        if not role.waypoints:
            steerings.append(_hover(uav))
        else:
            steerings.append(_path_following(uav))
    else:
        degraded = True
    if degraded:
        steerings = [_hover(uav), _altitude_hold(uav, uav.operating_height)]
    avoid = _collision_avoidance(uav, world)
    if avoid is not None:
        steerings.append(avoid)
    peers = [v for v in vehicles.values() if isinstance(v, Uav)] if vehicles else []
    steerings.extend(_swarm_steerings(uav, peers))
    return steerings


def combine_steerings(vectors: list[SteeringVector], a_cap: float = DEFAULT_A_CAP) -> tuple[float, float, float]:
    """Weighted average of the steering vectors, norm-clamped to a_cap."""
    total_w = sum(s.weight for s in vectors)
    if total_w <= 0.0:
        return (0.0, 0.0, 0.0)
    x = sum(s.vector[0] * s.weight for s in vectors) / total_w
    y = sum(s.vector[1] * s.weight for s in vectors) / total_w
    z = sum(s.vector[2] * s.weight for s in vectors) / total_w
    return clamp_norm((x, y, z), a_cap)


# ---------------------------------------------------------------------------
# locomotion


def locomotion_step(uav: Uav, commanded: tuple[float, float, float], dt: float) -> float:
    """Advance the quadrotor by dt under a commanded world-frame acceleration.

    The attitude setpoint is obtained by inverting the translational model for
    (T, roll, pitch) at the current yaw; attitude tracks it through a first-order
    lag. Thrust is recomputed from the achieved attitude so the vertical channel
    follows the command exactly. Returns the thrust in newtons.
    """
    p = uav.params
    m = p.mass
    kd = p.drag_coefficient

    ux = m * commanded[0] + kd * uav.vx
    uy = m * commanded[1] + kd * uav.vy
    uz = m * (commanded[2] + G) + kd * uav.vz
    norm = math.sqrt(ux * ux + uy * uy + uz * uz)

    sin_psi, cos_psi = math.sin(uav.yaw), math.cos(uav.yaw)
    if norm < 1e-9 or uz <= 0.0:
        roll_sp, pitch_sp = 0.0, 0.0
    else:
        roll_sp = math.asin(min(1.0, max(-1.0, (ux * sin_psi - uy * cos_psi) / norm)))
        pitch_sp = math.atan2(ux * cos_psi + uy * sin_psi, uz)

    uav.attitude_clamped = abs(roll_sp) > ATTITUDE_LIMIT_RAD or abs(pitch_sp) > ATTITUDE_LIMIT_RAD
    roll_sp = min(ATTITUDE_LIMIT_RAD, max(-ATTITUDE_LIMIT_RAD, roll_sp))
    pitch_sp = min(ATTITUDE_LIMIT_RAD, max(-ATTITUDE_LIMIT_RAD, pitch_sp))

    alpha = 1.0 - math.exp(-dt / p.tau_attitude)
    uav.roll += alpha * (roll_sp - uav.roll)
    uav.pitch += alpha * (pitch_sp - uav.pitch)

    sr, cr = math.sin(uav.roll), math.cos(uav.roll)
    sp, cp = math.sin(uav.pitch), math.cos(uav.pitch)
    nz = cp * cr
    thrust = max(0.0, (m * (G + commanded[2]) + kd * uav.vz) / max(nz, 0.3))

    nx = cos_psi * sp * cr + sin_psi * sr
    ny = sin_psi * sp * cr - cos_psi * sr
    ax = (thrust / m) * nx - (kd / m) * uav.vx
    ay = (thrust / m) * ny - (kd / m) * uav.vy
    az = (thrust / m) * nz - G - (kd / m) * uav.vz
    uav.last_accel = (ax, ay, az)

    uav.vx += ax * dt
    uav.vy += ay * dt
    uav.vz += az * dt
    speed = uav.speed
    if speed > p.v_max:
        s = p.v_max / speed
        uav.vx *= s
        uav.vy *= s
        uav.vz *= s
    uav.x += uav.vx * dt
    uav.y += uav.vy * dt
    uav.z = max(0.0, uav.z + uav.vz * dt)
    uav.thrust = thrust
    return thrust


def propulsion_power(thrust: float, airspeed: tuple[float, float, float], params: PowerParams) -> float:
    """Momentum-theory induced power under symmetric rotor load plus a profile floor.

    The induced term uses the hover form per rotor; translational lift effects on
    the induced power are neglected (airspeed is accepted for interface symmetry).
    """
    if thrust < 0.0:
        raise ValueError("thrust must be non-negative")
    per_rotor = thrust / params.rotor_count
    induced = params.rotor_count * per_rotor ** 1.5 / math.sqrt(2.0 * params.air_density * params.rotor_area)
    return induced + params.profile_power


def hover_power(params: UavParams) -> float:
    return propulsion_power(params.mass * G, (0.0, 0.0, 0.0), params.power)


def integrate_energy(uav: Uav, dt: float) -> float:
    """Trapezoidal energy accumulation of uav.power_w over one step; returns joules added."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if uav._last_power is None:
        uav._last_power = uav.power_w
    joules = 0.5 * (uav._last_power + uav.power_w) * dt
    uav.energy_j += joules
    uav._last_power = uav.power_w
    return joules


def uav_command(uav: Uav, world, vehicles: dict, dt: float) -> None:
    """One full mobility tick: behaviors -> combined steering -> locomotion -> power."""
    steerings = select_behaviors(uav, world, vehicles)
    commanded = combine_steerings(steerings, uav.params.a_cap)
    uav.last_steering = commanded
    thrust = locomotion_step(uav, commanded, dt)
    uav.power_w = propulsion_power(thrust, uav.velocity, uav.params.power)
    integrate_energy(uav, dt)
