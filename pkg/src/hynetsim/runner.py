"""Scenario execution: entity wiring, mobility ticks, trace sampling, snapshots,
single runs, seed batches, and cross-seed aggregation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .aerial import AerialRelay, AerialSensor, PowerParams, Uav, UavParams, WaypointMission, uav_command
from .channel import ChannelCache, ChannelParams
from .core import NS_PER_S, RandomStreams, RunReport, Scheduler, seconds, to_seconds
from .geometry import GeoPoint
from .ground import Car, FixedRouteStrategy, IdmParams, RandomStrategy, find_leader, step_car
from .netstack import (
    CellularInfrastructure,
    CellularLink,
    CsmaLink,
    FlowStats,
    Medium,
    MmWaveLink,
    RadioContext,
    SpsLink,
    Technology,
    Terminal,
    cam_source,
    cbr_source,
    collect_stats,
)
from .render import LinkGlyph, VehicleGlyph, render_snapshot
from .scenario import Scenario
from .tracing import TraceWriter, write_csv
from .world import World, load_osm_file

MOBILITY_STEP_S = 0.01
CAR_ANTENNA_HEIGHT_M = 1.5


class SimulationRun:
    """One seeded realization of a scenario, confined to a single scheduler."""

    def __init__(self, scenario: Scenario, world: World, seed: int,
                 duration_s: float | None = None,
                 snapshot_times_s: tuple[float, ...] | None = None,
                 cache_enabled: bool | None = None):
        self.scenario = scenario
        self.world = world
        self.seed = seed
        self.duration_s = scenario.duration_s if duration_s is None else duration_s
        self.snapshot_times = (scenario.snapshot_times_s if snapshot_times_s is None
                               else tuple(snapshot_times_s))
        self.scheduler = Scheduler()
        self.streams = RandomStreams(seed)
        ch = scenario.channel
        self.channel_params = ChannelParams(
            exponent=ch.exponent,
            obstruction_db_per_m=ch.obstruction_db_per_m,
            sigma_los_db=ch.sigma_los_db,
            sigma_nlos_db=ch.sigma_nlos_db,
            cell_size_m=ch.cell_size_m,
            n_re=ch.n_re,
            seed=seed,
        )
        use_cache = ch.cache if cache_enabled is None else cache_enabled
        self.cache = ChannelCache(self.channel_params) if use_cache else None
        self.ctx = RadioContext(world, self.channel_params, self.cache)

        self.cars: list[Car] = []
        self.uavs: list[Uav] = []
        self.entities: dict[str, object] = {}
        self.terminals: dict[str, Terminal] = {}
        self.techs: dict[str, Technology] = {t.name: t for t in scenario.technologies}
        self.media: dict[str, Medium] = {}
        self.infra: dict[str, CellularInfrastructure] = {}
        self.flow_stats: list[FlowStats] = []
        self.snapshots: dict[float, str] = {}
        self.crossing_log: dict[int, float] = {}

        self._spawn_entities()
        self._build_links()
        self._schedule_mobility()
        self._schedule_sampling()
        for t in self.snapshot_times:
            self.scheduler.schedule_at(seconds(t), self._take_snapshot, t)

    # -- construction ------------------------------------------------------

    def _spawn_entities(self) -> None:
        rng = self.streams.stream("mobility")
        seg_ids = sorted(self.world.segments)
        for decl in self.scenario.nodes:
            self.entities[decl.name] = decl
            self.terminals[decl.name] = Terminal(decl.name, lambda d=decl: d.position)
        for decl in self.scenario.cars:
            params = IdmParams(decl.v0, decl.headway_s, decl.a_max, decl.b_comfort,
                               decl.s0, decl.delta)
            if decl.strategy == "route" and decl.route_nodes:
                nodes = list(decl.route_nodes)
                path = self.world.shortest_path(nodes[0], nodes[1 % len(nodes)])
                if not path:
                    raise ValueError(f"car {decl.name}: no path between route nodes")
                at = nodes[0]
                oriented = []
                for seg in path:
                    fwd = seg.node_a == at
                    oriented.append((seg, fwd))
                    at = seg.node_b if fwd else seg.node_a
                car = Car(decl.name, oriented[0][0], 0.0, oriented[0][1],
                          strategy=FixedRouteStrategy(nodes, next_index=1), params=params)
                car.route = oriented[1:]
            else:
                seg = self.world.segments[seg_ids[int(rng.integers(0, len(seg_ids)))]]
                offset = float(rng.uniform(0.0, seg.length))
                forward = bool(rng.random() < 0.5)
                car = Car(decl.name, seg, offset, forward, strategy=RandomStrategy(), params=params)
            self.cars.append(car)
            self.entities[decl.name] = car
            self.terminals[decl.name] = Terminal(
                decl.name,
                lambda c=car: GeoPoint(c.position.x, c.position.y, CAR_ANTENNA_HEIGHT_M),
            )
        for decl in self.scenario.uavs:
            params = UavParams(
                mass=decl.mass_kg,
                v_max=decl.v_max,
                power=PowerParams(rotor_area=decl.rotor_area_m2, profile_power=decl.profile_power_w),
            )
            if decl.role == "sensor":
                role = AerialSensor(decl.target)
                anchor = self.entities[decl.target].position
                start = GeoPoint(anchor.x, anchor.y, decl.height_m)
            elif decl.role == "relay":
                role = AerialRelay(decl.target)
                anchor = self.entities[decl.target].position
                start = GeoPoint(anchor.x, anchor.y, decl.height_m)
            else:
                role = WaypointMission(decl.waypoints)
                first = decl.waypoints[0] if decl.waypoints else GeoPoint(0.0, 0.0, decl.height_m)
                start = GeoPoint(first.x, first.y, decl.height_m)
            uav = Uav(decl.name, start, role, decl.height_m, params)
            self.uavs.append(uav)
            self.entities[decl.name] = uav
            self.terminals[decl.name] = Terminal(decl.name, lambda u=uav: u.position)

    def _build_links(self) -> None:
        rng = self.streams.stream("mac")
        for tech in self.scenario.technologies:
            keep = seconds(1.0)
            self.media[tech.name] = Medium(keep)
            if tech.kind == "cellular":
                enb = self.terminals[tech.base_station]
                self.infra[tech.name] = CellularInfrastructure(self.scheduler, self.ctx, tech, enb)
        for decl in self.scenario.flows:
            tech = self.techs[decl.technology]
            stats = FlowStats(decl.name, tech.name)
            src = self.terminals[decl.src]
            dst = self.terminals[decl.dst]
            medium = self.media[tech.name]
            if tech.kind == "cellular":
                link = CellularLink(self.scheduler, rng, self.ctx, tech,
                                    self.infra[tech.name], src, dst, stats)
            elif tech.kind == "csma":
                link = CsmaLink(self.scheduler, rng, self.ctx, tech, medium, src, dst, stats)
            elif tech.kind == "sps":
                period = decl.interval_s if decl.interval_s > 0 else 8.0 * decl.size_bytes / decl.rate_bps
                link = SpsLink(self.scheduler, rng, self.ctx, tech, medium, src, dst, stats, period)
            elif tech.kind == "mmwave":
                link = MmWaveLink(self.scheduler, self.ctx, tech, medium, src, dst, stats)
            else:
                raise ValueError(f"unknown technology kind {tech.kind!r}")
            if decl.type == "cam":
                cam_source(self.scheduler, link, stats, decl.src, decl.dst,
                           decl.interval_s, decl.size_bytes, decl.phase_s,
                           decl.jitter_s, self.streams.stream("traffic"))
            else:
                cbr_source(self.scheduler, link, stats, decl.src, decl.dst,
                           decl.rate_bps, decl.size_bytes, decl.phase_s)
            self.flow_stats.append(stats)

    # -- periodic machinery --------------------------------------------------

    def _schedule_mobility(self) -> None:
        if not self.cars and not self.uavs:
            return
        step_ns = seconds(MOBILITY_STEP_S)
        rng = self.streams.stream("mobility")

        def tick(_):
            now_s = to_seconds(self.scheduler.now)
            for car in self.cars:
                leader = find_leader(car, self.cars)
                step_car(car, leader, MOBILITY_STEP_S, self.world, rng,
                         self.crossing_log, now_s)
            for uav in self.uavs:
                uav_command(uav, self.world, self.entities, MOBILITY_STEP_S)
            self.scheduler.schedule(step_ns, tick)

        self.scheduler.schedule(step_ns, tick)

    def _schedule_sampling(self) -> None:
        self.writer = TraceWriter(Path("."))
        trace = self.scenario.trace
        if self.cars or self.uavs:
            interval = seconds(trace.mobility_interval_s)

            def sample_mobility(_):
                t = to_seconds(self.scheduler.now)
                for car in self.cars:
                    p = car.position
                    self.writer.mobility_row(t, car.id, p.x, p.y, p.z, car.v, car.a, 0.0, 0.0)
                for uav in self.uavs:
                    ax, ay, az = uav.last_accel
                    self.writer.mobility_row(t, uav.id, uav.x, uav.y, uav.z, uav.speed,
                                             ax, ay, az, uav.power_w, uav.energy_j)
                self.scheduler.schedule(interval, sample_mobility)

            self.scheduler.schedule(interval, sample_mobility)

        if trace.radio_links:
            tech = self.techs[trace.radio_technology]
            interval = seconds(trace.radio_interval_s)

            def sample_radio(_):
                t = to_seconds(self.scheduler.now)
                for a, b in trace.radio_links:
                    tx_name, rx_name = a, b
                    if tx_name == tech.base_station:
                        power = tech.enb_tx_power_dbm
                    else:
                        power = tech.tx_power_dbm
                    res = self.ctx.result(self.terminals[tx_name].position,
                                          self.terminals[rx_name].position,
                                          tech.carrier_hz, power)
                    self.writer.radio_row(t, f"{a}:{b}", tech.name, res.d3d, res.d_obs,
                                          res.los, res.path_loss_db, res.rsrp_dbm)
                self.scheduler.schedule(interval, sample_radio)

            self.scheduler.schedule(interval, sample_radio)

    def _take_snapshot(self, t: float) -> None:
        glyphs = []
        for decl in self.scenario.nodes:
            glyphs.append(VehicleGlyph(decl.name, decl.position.x, decl.position.y,
                                       decl.position.z, 0.0, "node"))
        for car in self.cars:
            p = car.position
            glyphs.append(VehicleGlyph(car.id, p.x, p.y, p.z, car.heading, "car"))
        for uav in self.uavs:
            heading = math.atan2(uav.vy, uav.vx) if uav.speed > 0.1 else 0.0
            glyphs.append(VehicleGlyph(uav.id, uav.x, uav.y, uav.z, heading, "uav"))
        links = []
        trace = self.scenario.trace
        if trace.radio_links:
            tech = self.techs[trace.radio_technology]
            for a, b in trace.radio_links:
                pa = self.terminals[a].position
                pb = self.terminals[b].position
                res = self.ctx.result(pa, pb, tech.carrier_hz, tech.tx_power_dbm)
                links.append(LinkGlyph((pa.x, pa.y), (pb.x, pb.y), res.los))
        self.snapshots[t] = render_snapshot(self.world, glyphs, t, links)

    # -- execution -----------------------------------------------------------

    def run(self, out_dir: Path | str | None = None) -> dict:
        report = self.scheduler.run(seconds(self.duration_s))
        summaries = [collect_stats(st, self.duration_s) for st in self.flow_stats]
        result = {
            "report": report,
            "summaries": summaries,
            "stats": {st.name: st for st in self.flow_stats},
            "cache": self.cache,
            "snapshots": self.snapshots,
            "channel_queries": self.ctx.queries,
        }
        if out_dir is not None:
            out = Path(out_dir)
            self.writer.out_dir = out
            packet_rows = []
            for st in self.flow_stats:
                packet_rows.extend(st.packet_rows)
            self.writer.write_all(packet_rows, summaries)
            for t, svg in sorted(self.snapshots.items()):
                (out / f"snapshot_{t:g}s.svg").write_text(svg)
        return result


def run_single(scenario: Scenario, seed: int, out_dir: Path | str | None = None,
               world: World | None = None, duration_s: float | None = None,
               snapshot_times_s: tuple[float, ...] | None = None,
               cache_enabled: bool | None = None) -> dict:
    if world is None:
        world = load_osm_file(scenario.map_path)
    run = SimulationRun(scenario, world, seed, duration_s, snapshot_times_s, cache_enabled)
    return run.run(out_dir)


def _batch_worker(args) -> tuple[int, bool, str]:
    scenario, seed, out_dir, duration_s = args
    try:
        run_single(scenario, seed, out_dir, duration_s=duration_s)
        return (seed, True, "")
    except Exception as exc:  # keep the remaining seeds running
        return (seed, False, repr(exc))


def run_batch(scenario: Scenario, seeds: list[int], out_root: Path | str,
              duration_s: float | None = None, workers: int = 1) -> dict:
    """One output directory per seed plus an aggregate CSV of across-seed statistics.

    A failing seed is recorded and does not stop the batch.
    """
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = [(scenario, seed, out_root / f"seed_{seed}", duration_s) for seed in seeds]
    failures: dict[int, str] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for seed, ok, err in pool.map(_batch_worker, jobs):
                if not ok:
                    failures[seed] = err
    else:
        world = load_osm_file(scenario.map_path)
        for scenario_, seed, out_dir, dur in jobs:
            try:
                run_single(scenario_, seed, out_dir, world=world, duration_s=dur)
            except Exception as exc:
                failures[seed] = repr(exc)
    ok_seeds = [s for s in seeds if s not in failures]
    aggregate = aggregate_seed_summaries(out_root, ok_seeds)
    write_csv(out_root / "aggregate.csv",
              ["flow", "technology", "metric", "count", "mean", "std", "min",
               "q1", "median", "q3", "max", "whisker_low", "whisker_high"],
              aggregate)
    return {"failures": failures, "aggregate": aggregate, "seeds": ok_seeds}


_AGG_METRICS = ("pdr", "delay_mean_s", "delay_median_s", "delay_p95_s", "mean_rate_bps")


def aggregate_seed_summaries(out_root: Path, seeds: list[int]) -> list[list]:
    """Across-seed mean/stddev/quartiles plus 1.5-IQR whisker values per flow metric."""
    from .tracing import read_csv

    per_flow: dict[tuple[str, str], dict[str, list[float]]] = {}
    for seed in seeds:
        path = Path(out_root) / f"seed_{seed}" / "summary.csv"
        if not path.exists():
            continue
        for row in read_csv(path):
            key = (row["flow"], row["technology"])
            bucket = per_flow.setdefault(key, {m: [] for m in _AGG_METRICS})
            for m in _AGG_METRICS:
                if row[m] != "":
                    bucket[m].append(float(row[m]))
    rows: list[list] = []
    for (flow, tech) in sorted(per_flow):
        for metric in _AGG_METRICS:
            vals = per_flow[(flow, tech)][metric]
            if not vals:
                continue
            arr = np.asarray(vals)
            q1, median, q3 = (float(np.percentile(arr, q)) for q in (25, 50, 75))
            iqr = q3 - q1
            lo_candidates = arr[arr >= q1 - 1.5 * iqr]
            hi_candidates = arr[arr <= q3 + 1.5 * iqr]
            rows.append([
                flow, tech, metric, len(vals), float(arr.mean()),
                float(arr.std(ddof=1)) if len(vals) > 1 else 0.0,
                float(arr.min()), q1, median, q3, float(arr.max()),
                float(lo_candidates.min()), float(hi_candidates.max()),
            ])
    return rows
