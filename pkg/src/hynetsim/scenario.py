"""Scenario configuration: a line-oriented key/value format with named sections,
strict key checking, unit-aware values, and exact parse/serialize round-trips."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

from .geometry import GeoPoint
from .netstack import Technology

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "min": 60.0}
FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
RATE_UNITS = {"bit/s": 1.0, "kbit/s": 1e3, "Mbit/s": 1e6, "Gbit/s": 1e9}
LENGTH_UNITS = {"m": 1.0, "km": 1e3}
SPEED_UNITS = {"m/s": 1.0, "km/h": 1.0 / 3.6}
SIZE_UNITS = {"B": 1.0, "kB": 1e3}
DBM_UNITS = {"dBm": 1.0}
WATT_UNITS = {"W": 1.0}
BARE = {}


class ScenarioError(ValueError):
    """Parse or validation failure; carries (line, message) pairs."""

    def __init__(self, issues: list[tuple[int, str]]):
        self.issues = issues
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in issues))


def parse_quantity(text: str, units: dict[str, float]) -> float:
    parts = text.split()
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 2:
        value, unit = parts
        if unit not in units:
            raise ValueError(f"unknown unit {unit!r} (expected one of {sorted(units)})")
        return float(value) * units[unit]
    raise ValueError(f"cannot parse quantity {text!r}")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


@dataclass(frozen=True)
class ChannelSettings:
    exponent: float = 2.4
    obstruction_db_per_m: float = 0.4
    sigma_los_db: float = 3.0
    sigma_nlos_db: float = 6.0
    cell_size_m: float = 1.0
    n_re: int = 1200
    cache: bool = True


@dataclass(frozen=True)
class NodeDecl:
    """Static infrastructure node (base station and similar)."""

    name: str
    position: GeoPoint


@dataclass(frozen=True)
class CarDecl:
    name: str
    strategy: str = "random"  # "random" or "route"
    route_nodes: tuple[int, ...] = ()
    v0: float = 0.0  # 0 = segment speed limit
    headway_s: float = 1.5
    a_max: float = 1.4
    b_comfort: float = 2.0
    s0: float = 2.0
    delta: float = 4.0


@dataclass(frozen=True)
class UavDecl:
    name: str
    role: str = "sensor"  # sensor | relay | waypoints
    target: str = ""
    height_m: float = 30.0
    mass_kg: float = 2.0
    v_max: float = 15.0
    rotor_area_m2: float = 0.05
    profile_power_w: float = 10.0
    waypoints: tuple[GeoPoint, ...] = ()


@dataclass(frozen=True)
class FlowDecl:
    name: str
    type: str  # cam | cbr
    technology: str
    src: str
    dst: str
    size_bytes: int
    interval_s: float = 0.0
    rate_bps: float = 0.0
    phase_s: float = 0.0
    jitter_s: float = 0.0


@dataclass(frozen=True)
class TraceSettings:
    radio_links: tuple[tuple[str, str], ...] = ()
    radio_technology: str = ""
    radio_interval_s: float = 0.2
    mobility_interval_s: float = 0.1


@dataclass(frozen=True)
class Scenario:
    map_path: str
    duration_s: float
    seed: int = 1
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    nodes: tuple[NodeDecl, ...] = ()
    cars: tuple[CarDecl, ...] = ()
    uavs: tuple[UavDecl, ...] = ()
    technologies: tuple[Technology, ...] = ()
    flows: tuple[FlowDecl, ...] = ()
    trace: TraceSettings = field(default_factory=TraceSettings)
    snapshot_times_s: tuple[float, ...] = ()

    def entity_names(self) -> set[str]:
        return ({c.name for c in self.cars} | {u.name for u in self.uavs}
                | {n.name for n in self.nodes})

    def with_flow_rate(self, flow_name: str, rate_bps: float) -> "Scenario":
        """Copy of the scenario with one CBR flow retargeted to a new offered load."""
        flows = tuple(
            dataclasses.replace(f, rate_bps=rate_bps) if f.name == flow_name else f
            for f in self.flows
        )
        if not any(f.name == flow_name for f in self.flows):
            raise KeyError(flow_name)
        return dataclasses.replace(self, flows=flows)


# ---------------------------------------------------------------------------
# parsing

_TOP_KEYS = {"map", "duration", "seed"}

_CHANNEL_KEYS = {
    "exponent": ("exponent", lambda v: float(v)),
    "obstruction_db_per_m": ("obstruction_db_per_m", lambda v: float(v)),
    "sigma_los_db": ("sigma_los_db", lambda v: float(v)),
    "sigma_nlos_db": ("sigma_nlos_db", lambda v: float(v)),
    "cell_size": ("cell_size_m", lambda v: parse_quantity(v, LENGTH_UNITS)),
    "n_re": ("n_re", lambda v: int(v)),
    "cache": ("cache", _parse_bool),
}

_CAR_KEYS = {
    "strategy": None,  # handled specially
    "v0": ("v0", lambda v: parse_quantity(v, SPEED_UNITS)),
    "headway": ("headway_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "a_max": ("a_max", lambda v: float(v)),
    "b": ("b_comfort", lambda v: float(v)),
    "s0": ("s0", lambda v: parse_quantity(v, LENGTH_UNITS)),
    "delta": ("delta", lambda v: float(v)),
}

_UAV_KEYS = {
    "role": ("role", lambda v: v.strip()),
    "target": ("target", lambda v: v.strip()),
    "height": ("height_m", lambda v: parse_quantity(v, LENGTH_UNITS)),
    "mass": ("mass_kg", lambda v: parse_quantity(v, {"kg": 1.0})),
    "v_max": ("v_max", lambda v: parse_quantity(v, SPEED_UNITS)),
    "rotor_area": ("rotor_area_m2", lambda v: float(v)),
    "profile_power": ("profile_power_w", lambda v: parse_quantity(v, WATT_UNITS)),
    "waypoints": None,
}

_TECH_KEYS = {
    "kind": ("kind", lambda v: v.strip()),
    "carrier": ("carrier_hz", lambda v: parse_quantity(v, FREQ_UNITS)),
    "bandwidth": ("bandwidth_hz", lambda v: parse_quantity(v, FREQ_UNITS)),
    "tx_power": ("tx_power_dbm", lambda v: parse_quantity(v, DBM_UNITS)),
    "sinr_threshold": ("sinr_threshold_db", lambda v: float(v)),
    "noise_figure": ("noise_figure_db", lambda v: float(v)),
    "base_station": ("base_station", lambda v: v.strip()),
    "enb_tx_power": ("enb_tx_power_dbm", lambda v: parse_quantity(v, DBM_UNITS)),
    "grant_delay_min": ("grant_delay_min_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "grant_delay_max": ("grant_delay_max_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "buffer": ("buffer_bytes", lambda v: int(parse_quantity(v, SIZE_UNITS))),
    "slot": ("slot_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "sifs": ("sifs_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "cw_min": ("cw_min", lambda v: int(v)),
    "cw_max": ("cw_max", lambda v: int(v)),
    "sensing": ("sensing_dbm", lambda v: parse_quantity(v, DBM_UNITS)),
    "base_rate": ("base_rate_bps", lambda v: parse_quantity(v, RATE_UNITS)),
    "sps_slots": ("sps_slots", lambda v: int(v)),
    "sps_keep_probability": ("sps_keep_probability", lambda v: float(v)),
    "sps_counter_min": ("sps_counter_min", lambda v: int(v)),
    "sps_counter_max": ("sps_counter_max", lambda v: int(v)),
    "array_elements": ("array_elements", lambda v: int(v)),
    "array_spacing": ("array_spacing_wavelengths", lambda v: float(v)),
    "element_gain": ("element_gain_dbi", lambda v: float(v)),
    "max_steer": ("max_steer_deg", lambda v: float(v)),
}

_FLOW_KEYS = {
    "type": ("type", lambda v: v.strip()),
    "technology": ("technology", lambda v: v.strip()),
    "src": ("src", lambda v: v.strip()),
    "dst": ("dst", lambda v: v.strip()),
    "size": ("size_bytes", lambda v: int(parse_quantity(v, SIZE_UNITS))),
    "interval": ("interval_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "rate": ("rate_bps", lambda v: parse_quantity(v, RATE_UNITS)),
    "phase": ("phase_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "jitter": ("jitter_s", lambda v: parse_quantity(v, TIME_UNITS)),
}

_TRACE_KEYS = {
    "radio_links": None,
    "radio_technology": ("radio_technology", lambda v: v.strip()),
    "radio_interval": ("radio_interval_s", lambda v: parse_quantity(v, TIME_UNITS)),
    "mobility_interval": ("mobility_interval_s", lambda v: parse_quantity(v, TIME_UNITS)),
}

_TECH_KINDS = ("cellular", "csma", "sps", "mmwave")
_UAV_ROLES = ("sensor", "relay", "waypoints")


def _parse_waypoints(text: str) -> tuple[GeoPoint, ...]:
    pts = []
    for chunk in text.split(";"):
        coords = [float(c) for c in chunk.split(",")]
        if len(coords) != 3:
            raise ValueError(f"waypoint needs x,y,z: {chunk.strip()!r}")
        pts.append(GeoPoint(*coords))
    return tuple(pts)


def _parse_links(text: str) -> tuple[tuple[str, str], ...]:
    links = []
    for chunk in text.split(","):
        if ":" not in chunk:
            raise ValueError(f"link needs the form a:b, got {chunk.strip()!r}")
        a, b = chunk.split(":", 1)
        links.append((a.strip(), b.strip()))
    return tuple(links)


def parse_scenario(text: str, strict: bool = False) -> Scenario:
    """Parse and validate; unknown keys and dangling references are always errors,
    strict mode additionally turns unused-declaration warnings into errors."""
    issues: list[tuple[int, str]] = []
    warnings: list[tuple[int, str]] = []

    top: dict[str, str] = {}
    channel_kw: dict = {}
    nodes: list[NodeDecl] = []
    cars: list[CarDecl] = []
    uavs: list[UavDecl] = []
    techs: list[Technology] = []
    flows: list[FlowDecl] = []
    trace_kw: dict = {}
    snapshots: list[float] = []
    decl_lines: dict[tuple[str, str], int] = {}  # (section type, name) -> line

    section: tuple[str, str, int] | None = None  # (type, name, line)
    section_kw: dict = {}

    def close_section():
        nonlocal section, section_kw
        if section is None:
            return
        stype, name, line = section
        decl_lines[(stype, name)] = line
        try:
            if stype == "channel":
                channel_kw.update(section_kw)
            elif stype == "node":
                if "position" not in section_kw:
                    issues.append((line, f"node {name} needs a position"))
                else:
                    nodes.append(NodeDecl(name, section_kw["position"]))
            elif stype == "car":
                cars.append(CarDecl(name, **section_kw))
            elif stype == "uav":
                uavs.append(UavDecl(name, **section_kw))
            elif stype == "technology":
                if "kind" not in section_kw:
                    issues.append((line, f"technology {name} needs a kind"))
                elif section_kw["kind"] not in _TECH_KINDS:
                    issues.append((line, f"unknown technology kind {section_kw['kind']!r}"))
                elif "carrier_hz" not in section_kw or "bandwidth_hz" not in section_kw:
                    issues.append((line, f"technology {name} needs carrier and bandwidth"))
                else:
                    techs.append(Technology(name=name, **section_kw))
            elif stype == "flow":
                missing = [k for k in ("type", "technology", "src", "dst", "size_bytes")
                           if k not in section_kw]
                if missing:
                    issues.append((line, f"flow {name} missing {', '.join(missing)}"))
                else:
                    flows.append(FlowDecl(name, **section_kw))
            elif stype == "trace":
                trace_kw.update(section_kw)
            elif stype == "snapshot":
                snapshots.extend(section_kw.get("times", ()))
        except (TypeError, ValueError) as exc:
            issues.append((line, f"invalid section [{stype} {name}]: {exc}"))
        section = None
        section_kw = {}

    key_tables = {
        "channel": _CHANNEL_KEYS,
        "car": _CAR_KEYS,
        "uav": _UAV_KEYS,
        "technology": _TECH_KEYS,
        "flow": _FLOW_KEYS,
        "trace": _TRACE_KEYS,
    }

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            close_section()
            inner = line[1:-1].strip()
            parts = inner.split(None, 1)
            stype = parts[0]
            name = parts[1].strip() if len(parts) > 1 else ""
            if stype not in ("channel", "node", "car", "uav", "technology", "flow", "trace", "snapshot"):
                issues.append((lineno, f"unknown section type [{stype}]"))
                section = None
                continue
            if stype in ("node", "car", "uav", "technology", "flow") and not name:
                issues.append((lineno, f"section [{stype}] needs a name"))
                section = None
                continue
            section = (stype, name, lineno)
            continue
        if "=" not in line:
            issues.append((lineno, f"expected key = value, got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if section is None:
                if key not in _TOP_KEYS:
                    issues.append((lineno, f"unknown top-level key {key!r}"))
                else:
                    top[key] = value
                continue
            stype = section[0]
            if stype == "node":
                if key != "position":
                    issues.append((lineno, f"unknown node key {key!r}"))
                else:
                    coords = [float(c) for c in value.split(",")]
                    if len(coords) == 2:
                        coords.append(0.0)
                    if len(coords) != 3:
                        raise ValueError("position needs x,y[,z]")
                    section_kw["position"] = GeoPoint(*coords)
                continue
            if stype == "snapshot":
                if key != "times":
                    issues.append((lineno, f"unknown snapshot key {key!r}"))
                else:
                    section_kw["times"] = tuple(
                        parse_quantity(c.strip(), TIME_UNITS) for c in value.split(",")
                    )
                continue
            table = key_tables[stype]
            if key not in table:
                issues.append((lineno, f"unknown {stype} key {key!r}"))
                continue
            if stype == "car" and key == "strategy":
                parts = value.split()
                if parts[0] == "random":
                    section_kw["strategy"] = "random"
                elif parts[0] == "route":
                    section_kw["strategy"] = "route"
                    section_kw["route_nodes"] = tuple(int(p) for p in parts[1:])
                else:
                    raise ValueError(f"unknown strategy {parts[0]!r}")
                continue
            if stype == "uav" and key == "waypoints":
                section_kw["waypoints"] = _parse_waypoints(value)
                continue
            if stype == "trace" and key == "radio_links":
                section_kw["radio_links"] = _parse_links(value)
                continue
            attr, conv = table[key]
            section_kw[attr] = conv(value)
        except ValueError as exc:
            issues.append((lineno, f"{key}: {exc}"))
    close_section()

    if "map" not in top:
        issues.append((0, "missing top-level key 'map'"))
    if "duration" not in top:
        issues.append((0, "missing top-level key 'duration'"))
    duration = 0.0
    seed = 1
    try:
        duration = parse_quantity(top.get("duration", "0"), TIME_UNITS)
    except ValueError as exc:
        issues.append((0, f"duration: {exc}"))
    try:
        seed = int(top.get("seed", "1"))
    except ValueError as exc:
        issues.append((0, f"seed: {exc}"))

    scenario = Scenario(
        map_path=top.get("map", ""),
        duration_s=duration,
        seed=seed,
        channel=ChannelSettings(**channel_kw),
        nodes=tuple(nodes),
        cars=tuple(cars),
        uavs=tuple(uavs),
        technologies=tuple(techs),
        flows=tuple(flows),
        trace=TraceSettings(**trace_kw),
        snapshot_times_s=tuple(snapshots),
    )

    issues.extend(_validate(scenario, warnings, decl_lines))
    if strict:
        issues.extend(warnings)
    if issues:
        raise ScenarioError(sorted(issues))
    return scenario


def _validate(s: Scenario, warnings: list[tuple[int, str]],
              decl_lines: dict[tuple[str, str], int] | None = None) -> list[tuple[int, str]]:
    issues: list[tuple[int, str]] = []
    lines = decl_lines or {}

    def at(stype: str, name: str) -> int:
        return lines.get((stype, name), 0)
    if s.duration_s <= 0:
        issues.append((0, "duration must be positive"))
    names: dict[str, str] = {}
    for kind, decls in (("node", s.nodes), ("car", s.cars), ("uav", s.uavs)):
        for d in decls:
            if d.name in names:
                issues.append((0, f"duplicate entity name {d.name!r}"))
            names[d.name] = kind
    tech_names = {t.name for t in s.technologies}
    used_nodes: set[str] = set()
    used_techs: set[str] = set()

    car_names = {c.name for c in s.cars}
    node_names = {n.name for n in s.nodes}
    for u in s.uavs:
        ln = at("uav", u.name)
        if u.role not in _UAV_ROLES:
            issues.append((ln, f"uav {u.name}: unknown role {u.role!r}"))
        elif u.role == "sensor" and u.target not in car_names:
            issues.append((ln, f"uav {u.name}: sensor target {u.target!r} is not a declared car"))
        elif u.role == "relay" and u.target not in node_names:
            issues.append((ln, f"uav {u.name}: relay target {u.target!r} is not a declared base station"))
        elif u.role == "relay":
            used_nodes.add(u.target)

    for t in s.technologies:
        ln = at("technology", t.name)
        if t.kind == "cellular":
            if not t.base_station:
                issues.append((ln, f"technology {t.name}: cellular needs base_station"))
            elif t.base_station not in node_names:
                issues.append((ln, f"technology {t.name}: base_station {t.base_station!r} not declared"))
            else:
                used_nodes.add(t.base_station)

    for f in s.flows:
        ln = at("flow", f.name)
        if f.type not in ("cam", "cbr"):
            issues.append((ln, f"flow {f.name}: unknown type {f.type!r}"))
        if f.technology not in tech_names:
            issues.append((ln, f"flow {f.name}: undeclared technology {f.technology!r}"))
        else:
            used_techs.add(f.technology)
        for endpoint in (f.src, f.dst):
            if endpoint not in names:
                issues.append((ln, f"flow {f.name}: undeclared node {endpoint!r}"))
            elif names[endpoint] == "node":
                used_nodes.add(endpoint)
        if f.type == "cam" and f.interval_s <= 0:
            issues.append((ln, f"flow {f.name}: cam needs a positive interval"))
        if f.type == "cbr" and f.rate_bps <= 0:
            issues.append((ln, f"flow {f.name}: cbr needs a positive rate"))
        if f.size_bytes <= 0:
            issues.append((ln, f"flow {f.name}: size must be positive"))

    for a, b in s.trace.radio_links:
        for endpoint in (a, b):
            if endpoint not in names:
                issues.append((0, f"trace link references undeclared node {endpoint!r}"))
            elif names[endpoint] == "node":
                used_nodes.add(endpoint)
    if s.trace.radio_links:
        if not s.trace.radio_technology:
            issues.append((0, "trace radio_links need radio_technology"))
        elif s.trace.radio_technology not in tech_names:
            issues.append((0, f"trace radio_technology {s.trace.radio_technology!r} not declared"))
        else:
            used_techs.add(s.trace.radio_technology)

    for n in s.nodes:
        if n.name not in used_nodes:
            warnings.append((0, f"warning: node {n.name} declared but never used"))
    for t in s.technologies:
        if t.name not in used_techs:
            warnings.append((0, f"warning: technology {t.name} declared but never used"))
    return issues


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(s: Scenario) -> str:
    """Canonical text form; parse_scenario(serialize_scenario(s)) == s."""
    out: list[str] = [f"map = {s.map_path}", f"duration = {_fmt(s.duration_s)}", f"seed = {s.seed}", ""]

    out.append("[channel]")
    for f in fields(ChannelSettings):
        key = {"cell_size_m": "cell_size"}.get(f.name, f.name)
        out.append(f"{key} = {_fmt(getattr(s.channel, f.name))}")
    out.append("")

    for n in s.nodes:
        out.append(f"[node {n.name}]")
        out.append(f"position = {_fmt(n.position.x)}, {_fmt(n.position.y)}, {_fmt(n.position.z)}")
        out.append("")

    for c in s.cars:
        out.append(f"[car {c.name}]")
        if c.strategy == "route":
            out.append("strategy = route " + " ".join(str(n) for n in c.route_nodes))
        else:
            out.append("strategy = random")
        out.append(f"v0 = {_fmt(c.v0)}")
        out.append(f"headway = {_fmt(c.headway_s)}")
        out.append(f"a_max = {_fmt(c.a_max)}")
        out.append(f"b = {_fmt(c.b_comfort)}")
        out.append(f"s0 = {_fmt(c.s0)}")
        out.append(f"delta = {_fmt(c.delta)}")
        out.append("")

    for u in s.uavs:
        out.append(f"[uav {u.name}]")
        out.append(f"role = {u.role}")
        if u.target:
            out.append(f"target = {u.target}")
        out.append(f"height = {_fmt(u.height_m)}")
        out.append(f"mass = {_fmt(u.mass_kg)}")
        out.append(f"v_max = {_fmt(u.v_max)}")
        out.append(f"rotor_area = {_fmt(u.rotor_area_m2)}")
        out.append(f"profile_power = {_fmt(u.profile_power_w)}")
        if u.waypoints:
            wp = "; ".join(f"{_fmt(p.x)},{_fmt(p.y)},{_fmt(p.z)}" for p in u.waypoints)
            out.append(f"waypoints = {wp}")
        out.append("")

    attr_to_key = {attr: key for key, (attr, _) in
                   ((k, v) for k, v in _TECH_KEYS.items() if v is not None)}
    for t in s.technologies:
        out.append(f"[technology {t.name}]")
        out.append(f"kind = {t.kind}")
        out.append(f"carrier = {_fmt(t.carrier_hz)}")
        out.append(f"bandwidth = {_fmt(t.bandwidth_hz)}")
        for f in fields(Technology):
            if f.name in ("name", "kind", "carrier_hz", "bandwidth_hz"):
                continue
            value = getattr(t, f.name)
            if value != f.default:
                out.append(f"{attr_to_key[f.name]} = {_fmt(value)}")
        out.append("")

    for fl in s.flows:
        out.append(f"[flow {fl.name}]")
        out.append(f"type = {fl.type}")
        out.append(f"technology = {fl.technology}")
        out.append(f"src = {fl.src}")
        out.append(f"dst = {fl.dst}")
        out.append(f"size = {fl.size_bytes}")
        if fl.type == "cam" or fl.interval_s:
            out.append(f"interval = {_fmt(fl.interval_s)}")
        if fl.type == "cbr" or fl.rate_bps:
            out.append(f"rate = {_fmt(fl.rate_bps)}")
        if fl.phase_s:
            out.append(f"phase = {_fmt(fl.phase_s)}")
        if fl.jitter_s:
            out.append(f"jitter = {_fmt(fl.jitter_s)}")
        out.append("")

    out.append("[trace]")
    if s.trace.radio_links:
        out.append("radio_links = " + ", ".join(f"{a}:{b}" for a, b in s.trace.radio_links))
        out.append(f"radio_technology = {s.trace.radio_technology}")
    out.append(f"radio_interval = {_fmt(s.trace.radio_interval_s)}")
    out.append(f"mobility_interval = {_fmt(s.trace.mobility_interval_s)}")
    out.append("")

    if s.snapshot_times_s:
        out.append("[snapshot]")
        out.append("times = " + ", ".join(_fmt(t) for t in s.snapshot_times_s))
        out.append("")

    return "\n".join(out)
