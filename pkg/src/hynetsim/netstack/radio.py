"""Shared radio-layer helpers: noise, spectral-efficiency map, SINR, and the
registry of concurrent transmissions used for sensing and interference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..channel import ChannelCache, ChannelParams, ChannelQuery, ChannelResult, cached_path_loss
from ..world import World

# stepwise SINR (dB) -> spectral efficiency (bit/s/Hz), shared by the
# centralized-grant and mmWave capacity computations
SE_STEPS: tuple[tuple[float, float], ...] = (
    (-5.0, 0.2),
    (0.0, 0.5),
    (5.0, 1.0),
    (9.0, 1.9),
    (13.0, 2.8),
    (17.0, 3.9),
    (21.0, 5.5),
)

THERMAL_NOISE_DBM_HZ = -174.0


def spectral_efficiency(sinr_db: float) -> float:
    se = 0.0
    for threshold, value in SE_STEPS:
        if sinr_db >= threshold:
            se = value
        else:
            break
    return se


def capacity_bps(bandwidth_hz: float, sinr_db: float) -> float:
    return bandwidth_hz * spectral_efficiency(sinr_db)


def noise_floor_dbm(bandwidth_hz: float, noise_figure_db: float = 7.0) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def sinr_db(signal_dbm: float, noise_dbm: float, interference_dbm: list[float] | None = None) -> float:
    denom = dbm_to_mw(noise_dbm)
    if interference_dbm:
        denom += sum(dbm_to_mw(p) for p in interference_dbm)
    return signal_dbm - 10.0 * math.log10(denom)


class Transmission:
    """One on-air frame, kept for overlap/sensing bookkeeping."""

    __slots__ = ("start", "end", "node", "pos", "eirp_dbm", "frequency_hz", "tag")

    def __init__(self, start: int, end: int, node: str, pos, eirp_dbm: float,
                 frequency_hz: float, tag: int = -1):
        self.start = start
        self.end = end
        self.node = node
        self.pos = pos
        self.eirp_dbm = eirp_dbm
        self.frequency_hz = frequency_hz
        self.tag = tag


class Medium:
    """Per-(technology, carrier) log of transmissions with a bounded history window."""

    def __init__(self, keep_ns: int):
        self.keep_ns = keep_ns
        self._log: list[Transmission] = []

    def add(self, t: Transmission) -> None:
        self._log.append(t)

    def prune(self, now: int) -> None:
        cutoff = now - self.keep_ns
        if self._log and self._log[0].end < cutoff:
            self._log = [t for t in self._log if t.end >= cutoff]

    def overlapping(self, start: int, end: int, exclude: Transmission | None = None) -> list[Transmission]:
        return [t for t in self._log if t is not exclude and t.end > start and t.start < end]

    def tagged_within(self, tag: int, start: int, window: int,
                      exclude: Transmission | None = None) -> list[Transmission]:
        return [t for t in self._log if t is not exclude and t.tag == tag and abs(t.start - start) < window]

    def active(self, now: int) -> list[Transmission]:
        return [t for t in self._log if t.start <= now < t.end]


@dataclass
class RadioContext:
    """Bundles the world, channel parameters, and optional cache for link models."""

    world: World
    params: ChannelParams
    cache: ChannelCache | None = None
    queries: int = field(default=0)

    def result(self, tx_pos, rx_pos, frequency_hz: float, tx_power_dbm: float,
               tx_gain_dbi: float = 0.0, rx_gain_dbi: float = 0.0) -> ChannelResult:
        self.queries += 1
        q = ChannelQuery(tx_pos, rx_pos, frequency_hz, tx_power_dbm, tx_gain_dbi, rx_gain_dbi)
        return cached_path_loss(q, self.world, self.cache, self.params)

    def received_dbm(self, tx_pos, rx_pos, frequency_hz: float, eirp_dbm: float,
                     rx_gain_dbi: float = 0.0) -> float:
        res = self.result(tx_pos, rx_pos, frequency_hz, eirp_dbm, 0.0, rx_gain_dbi)
        return eirp_dbm + rx_gain_dbi - res.path_loss_db
