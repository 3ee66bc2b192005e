"""hynetsim: discrete-event simulation of hybrid ground/aerial vehicular networks.

Single-process architecture: one deterministic event scheduler drives hierarchical
mobility models (car-following on a road graph, steering-behavior quadrotors), a
3D building-obstruction channel with caching, abstract radio access models, and
trace/snapshot output.
"""

from .aerial import (
    AerialRelay,
    AerialSensor,
    PowerParams,
    SteeringVector,
    Uav,
    UavParams,
    WaypointMission,
    combine_steerings,
    hover_power,
    integrate_energy,
    locomotion_step,
    propulsion_power,
    select_behaviors,
)
from .beamforming import Alignment, ArrayConfig, ArrayFrame, CoverageError, Pointing, align_beams, array_factor_db, array_gain, export_pattern
from .channel import (
    ChannelCache,
    ChannelParams,
    ChannelQuery,
    ChannelResult,
    cached_path_loss,
    obstructed_distance,
    path_loss,
)
from .core import RandomStreams, RunReport, Scheduler, SimulationError, seconds, to_seconds
from .geometry import GeoPoint
from .ground import Car, FixedRouteStrategy, IdmParams, RandomStrategy, find_leader, idm_acceleration, step_car
from .netstack import FlowStats, Packet, Technology, cam_source, cbr_source, collect_stats
from .prediction import predict_car, predict_uav
from .render import render_snapshot
from .runner import SimulationRun, run_batch, run_single
from .scenario import Scenario, ScenarioError, parse_scenario, serialize_scenario
from .world import Building, RoadSegment, World, WorldError, load_osm, load_osm_file

__version__ = "0.1.0"
