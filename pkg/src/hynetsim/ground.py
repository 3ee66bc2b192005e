"""Ground vehicle agent: strategic routing layer on top of an IDM follower model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import GeoPoint
from .world import LANE_WIDTH_M, RoadSegment, World

B_EMERGENCY = 9.0  # m/s^2, hard braking clamp
MAX_ABS_ACCEL = 10.0
INTERSECTION_CLEAR_S = 1.0  # cars crossing within this window serialize by arrival


@dataclass(frozen=True)
class IdmParams:
    """Intelligent-driver-model constants (Treiber/Kesting defaults).

    v0 <= 0 means "use the current segment's speed limit".
    """

    v0: float = 0.0
    T: float = 1.5
    a_max: float = 1.4
    b: float = 2.0
    s0: float = 2.0
    delta: float = 4.0


def idm_acceleration(v: float, gap: float, closing_speed: float, p: IdmParams) -> float:
    """IDM acceleration for speed v, bumper gap, and approach rate (v_ego - v_leader).

    gap = +inf denotes a free road. gap <= 0 is a collision state and returns the
    emergency braking value.
    """
    if gap <= 0.0:
        return -B_EMERGENCY
    a_free = (v / p.v0) ** p.delta if p.v0 > 0 else 0.0
    if math.isinf(gap):
        interaction = 0.0
    else:
        s_star = p.s0 + max(0.0, v * p.T + v * closing_speed / (2.0 * math.sqrt(p.a_max * p.b)))
        interaction = (s_star / gap) ** 2
    a = p.a_max * (1.0 - a_free - interaction)
    return min(p.a_max, max(-B_EMERGENCY, a))


@dataclass
class RandomStrategy:
    """Pick a uniform next segment at every intersection, avoiding U-turns when possible."""


@dataclass
class FixedRouteStrategy:
    """Cycle through waypoint node ids, recomputing shortest paths between them."""

    node_ids: list[int]
    next_index: int = 0


@dataclass
class Car:
    id: str
    segment: RoadSegment
    offset: float  # meters from the entry endpoint
    forward: bool  # True when travelling node_a -> node_b
    v: float = 0.0
    a: float = 0.0
    route: list[tuple[RoadSegment, bool]] = field(default_factory=list)
    strategy: RandomStrategy | FixedRouteStrategy = field(default_factory=RandomStrategy)
    params: IdmParams = field(default_factory=IdmParams)
    collision_flag: bool = False

    @property
    def position(self) -> GeoPoint:
        return self.segment.point_at(self.offset, self.forward, LANE_WIDTH_M / 2.0)

    @property
    def heading(self) -> float:
        return self.segment.heading_at(self.offset, self.forward)

    @property
    def exit_node(self) -> int:
        return self.segment.node_b if self.forward else self.segment.node_a

    @property
    def entry_node(self) -> int:
        return self.segment.node_a if self.forward else self.segment.node_b

    def effective_params(self) -> IdmParams:
        if self.params.v0 > 0:
            return self.params
        return replace(self.params, v0=self.segment.speed_limit)

    def remaining_route_points(self) -> list[GeoPoint]:
        """Centerline polyline from the current position to the route end."""
        pts = [self.segment.point_at(self.offset, self.forward)]
        off = self.offset
        seg, fwd = self.segment, self.forward
        step = 2.0
        d = off + step
        while d < seg.length:
            pts.append(seg.point_at(d, fwd))
            d += step
        pts.append(seg.point_at(seg.length, fwd))
        for seg, fwd in self.route:
            d = step
            while d < seg.length:
                pts.append(seg.point_at(d, fwd))
                d += step
            pts.append(seg.point_at(seg.length, fwd))
        return pts


def _choose_next(car: Car, world: World, rng) -> tuple[RoadSegment, bool] | None:
    node = car.exit_node
    options = [world.segments[sid] for sid in world.neighbors(node)]
    non_uturn = [s for s in options if s.id != car.segment.id]
    if isinstance(car.strategy, FixedRouteStrategy):
        strat = car.strategy
        if not strat.node_ids:
            return None
        target = strat.node_ids[strat.next_index % len(strat.node_ids)]
        if target == node:
            strat.next_index += 1
            target = strat.node_ids[strat.next_index % len(strat.node_ids)]
        path = world.shortest_path(node, target)
        if not path:
            return None
        route = []
        at = node
        for seg in path:
            fwd = seg.node_a == at
            route.append((seg, fwd))
            at = seg.node_b if fwd else seg.node_a
        car.route = route[1:]
        return route[0]
    pool = non_uturn if non_uturn else options
    pick = pool[int(rng.integers(0, len(pool)))]
    return (pick, pick.node_a == node)


def step_car(
    car: Car,
    leader: tuple[float, float] | None,
    dt: float,
    world: World,
    rng,
    crossing_log: dict[int, float] | None = None,
    now_s: float = 0.0,
) -> None:
    """Advance one mobility step: IDM acceleration, ballistic update, segment/route advance.

    `leader` is (gap, closing_speed) to the nearest vehicle ahead, or None for a
    free road. `crossing_log` serializes intersection crossings by arrival order.
    """
    p = car.effective_params()

    gap, dv = (math.inf, 0.0) if leader is None else leader
    if leader is not None and gap <= 0.0:
        car.collision_flag = True

    # hold short of a recently used intersection: model it as a stopped leader
    if crossing_log is not None and car.v >= 0.0:
        remaining = car.segment.length - car.offset
        if remaining < max(30.0, car.v * 3.0):
            last = crossing_log.get(car.exit_node)
            if last is not None and 0.0 < now_s - last < INTERSECTION_CLEAR_S:
                hold_gap = max(remaining, 0.05)
                if hold_gap < gap:
                    gap, dv = hold_gap, car.v

    car.a = idm_acceleration(car.v, gap, dv, p)
    v_new = car.v + car.a * dt
    if v_new < 0.0:
        # stop within the step; advance the distance covered until standstill
        t_stop = car.v / -car.a if car.a < 0 else 0.0
        dist = max(0.0, car.v * t_stop + 0.5 * car.a * t_stop * t_stop)
        v_new = 0.0
    else:
        dist = max(0.0, car.v * dt + 0.5 * car.a * dt * dt)
    car.v = v_new
    car.offset += dist

    while car.offset >= car.segment.length:
        leftover = car.offset - car.segment.length
        if crossing_log is not None:
            crossing_log[car.exit_node] = now_s
        if not car.route:
            nxt = _choose_next(car, world, rng)
            if nxt is None:
                car.offset = car.segment.length
                car.v = 0.0
                return
            car.segment, car.forward = nxt
        else:
            car.segment, car.forward = car.route.pop(0)
        car.offset = leftover


def find_leader(car: Car, cars: list[Car]) -> tuple[float, float] | None:
    """Nearest vehicle ahead on the current or next route segment, as (gap, closing_speed).

    Scans only one segment ahead; adequate at suburban densities.
    """
    best_gap = math.inf
    best_dv = 0.0
    next_seg = car.route[0] if car.route else None
    for other in cars:
        if other is car:
            continue
        if other.segment.id == car.segment.id and other.forward == car.forward:
            d = other.offset - car.offset
            if 0.0 < d < best_gap:
                best_gap, best_dv = d, car.v - other.v
        elif next_seg is not None and other.segment.id == next_seg[0].id and other.forward == next_seg[1]:
            d = (car.segment.length - car.offset) + other.offset
            if 0.0 < d < best_gap:
                best_gap, best_dv = d, car.v - other.v
    if math.isinf(best_gap):
        return None
    return (best_gap, best_dv)
