import math

import pytest

from hynetsim.aerial import AerialSensor, Uav, UavParams, WaypointMission
from hynetsim.geometry import GeoPoint
from hynetsim.ground import Car, IdmParams
from hynetsim.prediction import predict_car, predict_uav
from hynetsim.world import LANE_WIDTH_M, Projection, RoadSegment, World


def corner_world():
    """100 m east leg turning 90 degrees into a 100 m north leg."""
    nodes = {1: GeoPoint(0.0, 0.0), 2: GeoPoint(100.0, 0.0), 3: GeoPoint(100.0, 100.0)}
    segs = {
        "a": RoadSegment("a", 1, 2, [nodes[1], nodes[2]]),
        "b": RoadSegment("b", 2, 3, [nodes[2], nodes[3]]),
    }
    return World(nodes, segs, [], Projection(51.49, 7.41))


def test_car_at_rest_predicts_current_position():
    world = corner_world()
    car = Car("c", world.segments["a"], 30.0, True, v=0.0)
    for tau in (0.5, 5.0, 30.0):
        p = predict_car(car, tau)
        assert math.dist(p, world.segments["a"].point_at(30.0, True)) < 1e-9


def test_car_straight_arc_length_advance():
    world = corner_world()
    car = Car("c", world.segments["a"], 0.0, True, v=10.0)
    p = predict_car(car, 5.0)
    assert p.x == pytest.approx(50.0, abs=0.01)
    assert p.y == pytest.approx(0.0, abs=0.01)


def _polyline_oracle(points, dist):
    # independent arc-length walk
    remaining = dist
    for a, b in zip(points, points[1:]):
        leg = math.dist(a, b)
        if remaining <= leg:
            t = remaining / leg
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2]))
        remaining -= leg
    return points[-1]


def test_car_prediction_follows_the_corner():
    world = corner_world()
    car = Car("c", world.segments["a"], 70.0, True, v=10.0)
    car.route = [(world.segments["b"], True)]
    p = predict_car(car, 5.0)  # 50 m ahead: 30 m to the corner + 20 m north
    oracle = _polyline_oracle(
        [GeoPoint(70.0, 0.0, 0.0), GeoPoint(100.0, 0.0, 0.0), GeoPoint(100.0, 100.0, 0.0)], 50.0)
    assert math.dist(p, oracle) < 0.5  # small slack for polyline resampling
    assert p.x == pytest.approx(100.0, abs=0.5)
    assert p.y == pytest.approx(20.0, abs=0.5)
    # not the straight-line extrapolation (which would sit at x=120)
    assert p.x < 110.0


def test_car_route_exhausted_stops_at_end():
    world = corner_world()
    car = Car("c", world.segments["a"], 90.0, True, v=10.0)
    p = predict_car(car, 30.0)  # 300 m wanted, only 10 m of route left
    assert p.x == pytest.approx(100.0, abs=0.01)
    assert p.y == pytest.approx(0.0, abs=0.01)


def test_hovering_uav_predicts_in_place():
    uav = Uav("u", GeoPoint(5.0, 6.0, 30.0), WaypointMission(()))
    assert math.dist(predict_uav(uav, 10.0), (5.0, 6.0, 30.0)) < 1e-9


def test_waypoint_leg_constant_speed_traversal():
    uav = Uav("u", GeoPoint(0.0, 0.0, 30.0), WaypointMission((GeoPoint(100.0, 0.0, 30.0),)))
    uav.vx = 10.0
    p = predict_uav(uav, 3.0)
    assert p.x == pytest.approx(30.0, abs=1e-6)
    assert p.z == pytest.approx(30.0)


def test_second_order_extrapolation_closed_form():
    uav = Uav("u", GeoPoint(0.0, 0.0, 30.0), AerialSensor("nobody"))
    uav.vx = 5.0
    uav.last_steering = (0.0, 1.0, 0.0)
    p = predict_uav(uav, 2.0)
    assert (p.x, p.y - 0.0, p.z) == pytest.approx((10.0, 2.0, 30.0))


def test_speed_clamp_bounds_displacement():
    params = UavParams(v_max=15.0)
    uav = Uav("u", GeoPoint(0.0, 0.0, 30.0), AerialSensor("nobody"), params=params)
    uav.vx = 14.0
    uav.last_steering = (8.0, 0.0, 0.0)
    tau = 10.0
    p = predict_uav(uav, tau)
    assert math.dist(p, (0.0, 0.0, 30.0)) <= params.v_max * tau + 1e-6


def test_horizon_continuity_as_tau_to_zero():
    world = corner_world()
    car = Car("c", world.segments["a"], 20.0, True, v=13.0)
    uav = Uav("u", GeoPoint(3.0, 4.0, 30.0), AerialSensor("nobody"))
    uav.vx, uav.vy = 4.0, -2.0
    for tau in (1.0, 0.1, 0.01, 0.001):
        assert math.dist(predict_car(car, tau), car.position) <= car.v * tau + LANE_WIDTH_M
        assert math.dist(predict_uav(uav, tau), uav.position) <= uav.speed * tau + 1e-6


def test_horizon_bound_enforced():
    world = corner_world()
    car = Car("c", world.segments["a"], 0.0, True, v=10.0)
    with pytest.raises(ValueError):
        predict_car(car, 61.0)


def test_replay_error_within_kinematic_bound():
    # deterministic straight mission replay: compare forecast to the actual
    # future position produced by the locomotion loop
    from hynetsim.aerial import uav_command
    from tests.test_aerial import tiny_world

    world = tiny_world()
    params = UavParams(mass=2.0)
    uav = Uav("u", GeoPoint(-150.0, 0.0, 30.0), WaypointMission((GeoPoint(500.0, 0.0, 30.0),)),
              operating_height=30.0, params=params)
    # warm up to cruise
    for _ in range(2000):
        uav_command(uav, world, {}, 0.01)
    for tau in (1.0, 5.0, 10.0):
        snapshot = Uav("s", uav.position, uav.role, 30.0, params)
        snapshot.vx, snapshot.vy, snapshot.vz = uav.vx, uav.vy, uav.vz
        snapshot.waypoint_index = uav.waypoint_index
        forecast = predict_uav(snapshot, tau)
        future = Uav("f", uav.position, uav.role, 30.0, params)
        future.vx, future.vy, future.vz = uav.vx, uav.vy, uav.vz
        future.roll, future.pitch = uav.roll, uav.pitch
        future.waypoint_index = uav.waypoint_index
        for _ in range(int(tau / 0.01)):
            uav_command(future, world, {}, 0.01)
        bound = 0.5 * params.a_cap * tau * tau + params.v_max * 0.1 * tau + 1.0
        assert math.dist(forecast, future.position) <= bound
