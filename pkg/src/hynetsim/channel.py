"""Obstacle-aware radio channel: 3D obstructed distance through buildings,
log-distance path loss with obstruction attenuation and deterministic shadowing,
and a position-quantized result cache."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from hashlib import blake2b
from statistics import NormalDist

from .geometry import GeoPoint, segment_prism_interval
from .world import World

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE_M = 0.1

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class ChannelParams:
    exponent: float = 2.4  # log-distance path-loss exponent
    obstruction_db_per_m: float = 0.4
    sigma_los_db: float = 3.0
    sigma_nlos_db: float = 6.0
    cell_size_m: float = 1.0  # quantization for caching and shadowing
    n_re: int = 1200  # resource-element divisor for RSRP normalization
    seed: int = 0


@dataclass(frozen=True)
class ChannelQuery:
    tx: GeoPoint
    rx: GeoPoint
    frequency_hz: float
    tx_power_dbm: float = 0.0
    tx_gain_dbi: float = 0.0
    rx_gain_dbi: float = 0.0


@dataclass(frozen=True)
class ChannelResult:
    d3d: float
    d_obs: float
    los: bool
    path_loss_db: float
    rsrp_dbm: float
    shadow_db: float


def obstructed_distance(tx, rx, world: World) -> float:
    """Total 3D length of the tx-rx segment lying inside building prisms.

    Exact for convex footprint pieces via half-plane clipping; concave footprints
    were triangulated at load time. Endpoint order is canonicalized so the result
    is exactly symmetric.
    """
    a, b = (tx, rx) if (tx[0], tx[1], tx[2]) <= (rx[0], rx[1], rx[2]) else (rx, tx)
    length = math.dist((a[0], a[1], a[2]), (b[0], b[1], b[2]))
    if length == 0.0:
        return 0.0
    total_t = 0.0
    for building in world.buildings_near(a, b):
        x0, y0, x1, y1 = building.bbox
        if max(a[0], b[0]) < x0 or min(a[0], b[0]) > x1:
            continue
        if max(a[1], b[1]) < y0 or min(a[1], b[1]) > y1:
            continue
        if min(a[2], b[2]) > building.height:
            continue
        for planes in building.pieces:
            hit = segment_prism_interval(a, b, planes, building.height)
            if hit is not None:
                total_t += hit[1] - hit[0]
    return total_t * length


def free_space_intercept_db(frequency_hz: float) -> float:
    """Free-space path loss at the 1 m reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * frequency_hz / SPEED_OF_LIGHT)


def _cell_index(p, cell: float) -> tuple[int, int, int]:
    return (math.floor(p[0] / cell), math.floor(p[1] / cell), math.floor(p[2] / cell))


def _shadow_standard_normal(cell_a, cell_b, frequency_hz: float, seed: int) -> float:
    """Deterministic standard-normal draw per unordered cell pair (and frequency)."""
    lo, hi = (cell_a, cell_b) if cell_a <= cell_b else (cell_b, cell_a)
    raw = struct.pack(
        "<6iqq", lo[0], lo[1], lo[2], hi[0], hi[1], hi[2], int(frequency_hz), seed & 0x7FFFFFFFFFFFFFFF
    )
    h = int.from_bytes(blake2b(raw, digest_size=8).digest(), "little")
    u = (h + 0.5) / 2.0**64
    return _STD_NORMAL.inv_cdf(u)


def path_loss(query: ChannelQuery, world: World, params: ChannelParams) -> ChannelResult:
    """Log-distance path loss plus linear obstruction attenuation plus deterministic
    per-cell-pair lognormal shadowing; never reported below the free-space value."""
    d3d = math.dist(query.tx, query.rx)
    d_obs = obstructed_distance(query.tx, query.rx, world)
    d_eff = max(d3d, MIN_DISTANCE_M)
    los = d_obs == 0.0
    pl0 = free_space_intercept_db(query.frequency_hz)
    sigma = params.sigma_los_db if los else params.sigma_nlos_db
    cell = params.cell_size_m
    shadow = sigma * _shadow_standard_normal(
        _cell_index(query.tx, cell), _cell_index(query.rx, cell), query.frequency_hz, params.seed
    )
    pl = pl0 + 10.0 * params.exponent * math.log10(d_eff) + params.obstruction_db_per_m * d_obs + shadow
    free_space = pl0 + 20.0 * math.log10(d_eff)
    pl = max(pl, free_space)
    rsrp = query.tx_power_dbm + query.tx_gain_dbi + query.rx_gain_dbi - pl - 10.0 * math.log10(params.n_re)
    return ChannelResult(d3d, d_obs, los, pl, rsrp, shadow)


def received_power_dbm(query: ChannelQuery, result: ChannelResult) -> float:
    """Wideband received power (no resource-element normalization), for SINR budgets."""
    return query.tx_power_dbm + query.tx_gain_dbi + query.rx_gain_dbi - result.path_loss_db


@dataclass
class ChannelCache:
    """Memoizes path-loss results keyed on quantized endpoint cells.

    Cached entries are computed at the cell centers, so a repeat query anywhere in
    the same cell pair returns the identical result.
    """

    params: ChannelParams
    hits: int = 0
    misses: int = 0
    _store: dict = field(default_factory=dict)

    def lookup(self, query: ChannelQuery, world: World) -> ChannelResult:
        cell = self.params.cell_size_m
        tx_cell = _cell_index(query.tx, cell)
        rx_cell = _cell_index(query.rx, cell)
        key = (tx_cell, rx_cell, query.frequency_hz,
               query.tx_power_dbm, query.tx_gain_dbi, query.rx_gain_dbi)
        found = self._store.get(key)
        if found is not None:
            self.hits += 1
            return found
        self.misses += 1
        centered = ChannelQuery(
            GeoPoint((tx_cell[0] + 0.5) * cell, (tx_cell[1] + 0.5) * cell, (tx_cell[2] + 0.5) * cell),
            GeoPoint((rx_cell[0] + 0.5) * cell, (rx_cell[1] + 0.5) * cell, (rx_cell[2] + 0.5) * cell),
            query.frequency_hz,
            query.tx_power_dbm,
            query.tx_gain_dbi,
            query.rx_gain_dbi,
        )
        result = path_loss(centered, world, self.params)
        self._store[key] = result
        return result

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


def cached_path_loss(query: ChannelQuery, world: World, cache: ChannelCache | None,
                     params: ChannelParams | None = None) -> ChannelResult:
    """Cache-backed path loss; passes through to a fresh computation when cache is None."""
    if cache is not None:
        return cache.lookup(query, world)
    return path_loss(query, world, params if params is not None else ChannelParams())
