"""Abstract medium-access models: centralized grant (cellular), CSMA/CA,
semi-persistent scheduling, and a beam-aligned mmWave link."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

from ..beamforming import ArrayConfig, ArrayFrame, Pointing, align_beams, array_gain
from ..core import NS_PER_S, Scheduler
from .radio import (
    Medium,
    RadioContext,
    SE_STEPS,
    Transmission,
    capacity_bps,
    noise_floor_dbm,
    sinr_db,
)


@dataclass(frozen=True)
class Technology:
    """Radio-access flavor plus every tunable constant of its access model."""

    name: str
    kind: str  # cellular | csma | sps | mmwave
    carrier_hz: float
    bandwidth_hz: float
    tx_power_dbm: float = 23.0
    sinr_threshold_db: float = 5.0
    noise_figure_db: float = 7.0
    # cellular
    base_station: str = ""
    enb_tx_power_dbm: float = 43.0
    grant_delay_min_s: float = 0.004
    grant_delay_max_s: float = 0.012
    buffer_bytes: int = 3_000_000
    # csma
    slot_s: float = 13e-6
    sifs_s: float = 32e-6
    cw_min: int = 15
    cw_max: int = 1023
    sensing_dbm: float = -85.0
    base_rate_bps: float = 0.0  # fixed broadcast PHY rate; 0 = use the SINR map
    # sps
    sps_slots: int = 50
    sps_keep_probability: float = 0.8
    sps_counter_min: int = 5
    sps_counter_max: int = 15
    # mmwave
    array_elements: int = 8
    array_spacing_wavelengths: float = 0.5
    element_gain_dbi: float = 6.0
    max_steer_deg: float = 60.0

    @property
    def difs_s(self) -> float:
        return self.sifs_s + 2.0 * self.slot_s

    @property
    def noise_dbm(self) -> float:
        return noise_floor_dbm(self.bandwidth_hz, self.noise_figure_db)

    def array_config(self) -> ArrayConfig:
        return ArrayConfig(
            n=self.array_elements,
            m=self.array_elements,
            spacing_wavelengths=self.array_spacing_wavelengths,
            frequency_hz=self.carrier_hz,
            element_gain_dbi=self.element_gain_dbi,
            max_steer_deg=self.max_steer_deg,
        )


class Terminal:
    """Radio endpoint bound to a (possibly moving) entity; z includes antenna height."""

    __slots__ = ("name", "_position_fn")

    def __init__(self, name: str, position_fn: Callable):
        self.name = name
        self._position_fn = position_fn

    @property
    def position(self):
        return self._position_fn()


def _airtime_rate(tech: Technology, snr: float) -> float:
    """Serialization rate; floored at the lowest modulation so airtime stays finite."""
    if tech.base_rate_bps > 0.0:
        return tech.base_rate_bps
    return max(capacity_bps(tech.bandwidth_hz, snr), tech.bandwidth_hz * SE_STEPS[0][1])


class CsmaLink:
    """Listen-before-talk with binary exponential backoff; overlapping frames above
    the sensing threshold at a receiver destroy each other (no capture)."""

    def __init__(self, scheduler: Scheduler, rng, ctx: RadioContext, tech: Technology,
                 medium: Medium, src: Terminal, dst: Terminal, stats):
        self.scheduler = scheduler
        self.rng = rng
        self.ctx = ctx
        self.tech = tech
        self.medium = medium
        self.src = src
        self.dst = dst
        self.stats = stats

    def send(self, packet) -> None:
        self._attempt(packet, self.tech.cw_min)

    def _busy_until(self, now: int) -> int:
        pos = self.src.position
        busy = 0
        for t in self.medium.active(now):
            if t.node == self.src.name:
                continue
            rx = self.ctx.received_dbm(t.pos, pos, t.frequency_hz, t.eirp_dbm)
            if rx >= self.tech.sensing_dbm and t.end > busy:
                busy = t.end
        return busy

    def _attempt(self, packet, cw: int) -> None:
        now = self.scheduler.now
        self.medium.prune(now)
        busy_end = self._busy_until(now)
        if busy_end > now:
            backoff = int(self.rng.integers(0, cw + 1)) * self.tech.slot_s
            delay = (busy_end - now) + round((self.tech.difs_s + backoff) * NS_PER_S)
            next_cw = min(2 * cw + 1, self.tech.cw_max)
            self.scheduler.schedule(delay, lambda _: self._attempt(packet, next_cw))
            return
        start = now + round(self.tech.difs_s * NS_PER_S)
        self.scheduler.schedule_at(start, lambda _: self._transmit(packet))

    def _transmit(self, packet) -> None:
        start = self.scheduler.now
        tx_pos = self.src.position
        res = self.ctx.result(tx_pos, self.dst.position, self.tech.carrier_hz, self.tech.tx_power_dbm)
        signal = self.tech.tx_power_dbm - res.path_loss_db
        snr = sinr_db(signal, self.tech.noise_dbm)
        duration = round(8.0 * packet.size / _airtime_rate(self.tech, snr) * NS_PER_S)
        frame = Transmission(start, start + duration, self.src.name, tx_pos,
                             self.tech.tx_power_dbm, self.tech.carrier_hz)
        self.medium.add(frame)
        self.scheduler.schedule(duration, lambda _: self._finish(packet, frame, snr))

    def _finish(self, packet, frame: Transmission, snr: float) -> None:
        now = self.scheduler.now
        rx_pos = self.dst.position
        collided = False
        for other in self.medium.overlapping(frame.start, frame.end, exclude=frame):
            if other.node == self.src.name or other.node == self.dst.name:
                continue
            rx = self.ctx.received_dbm(other.pos, rx_pos, other.frequency_hz, other.eirp_dbm)
            if rx >= self.tech.sensing_dbm:
                collided = True
                break
        if collided:
            self.stats.record_lost(packet, "collision", now)
        elif snr < self.tech.sinr_threshold_db:
            self.stats.record_lost(packet, "sinr", now)
        else:
            self.stats.record_delivered(packet, now)


class SpsReservation:
    """Slot index plus reselection counter; the unit the small-instance oracle drives."""

    __slots__ = ("rng", "n_slots", "keep_probability", "counter_min", "counter_max", "slot", "counter")

    def __init__(self, rng, n_slots: int, keep_probability: float = 0.8,
                 counter_min: int = 5, counter_max: int = 15):
        self.rng = rng
        self.n_slots = n_slots
        self.keep_probability = keep_probability
        self.counter_min = counter_min
        self.counter_max = counter_max
        self.slot = int(rng.integers(0, n_slots))
        self.counter = int(rng.integers(counter_min, counter_max + 1))

    def after_transmission(self) -> None:
        self.counter -= 1
        if self.counter == 0:
            if self.rng.random() >= self.keep_probability:
                self.slot = int(self.rng.integers(0, self.n_slots))
            self.counter = int(self.rng.integers(self.counter_min, self.counter_max + 1))


class SpsLink:
    """Periodic reservation on one of R orthogonal resource slots; two reservations
    on the same slot within one period conflict and jam each other's receiver."""

    def __init__(self, scheduler: Scheduler, rng, ctx: RadioContext, tech: Technology,
                 medium: Medium, src: Terminal, dst: Terminal, stats, period_s: float):
        self.scheduler = scheduler
        self.ctx = ctx
        self.tech = tech
        self.medium = medium
        self.src = src
        self.dst = dst
        self.stats = stats
        self.period_ns = round(period_s * NS_PER_S)
        self.latency_ns = round(period_s / tech.sps_slots * NS_PER_S)
        self.reservation = SpsReservation(
            rng, tech.sps_slots, tech.sps_keep_probability,
            tech.sps_counter_min, tech.sps_counter_max,
        )

    def send(self, packet) -> None:
        self.scheduler.schedule(self.latency_ns, lambda _: self._transmit(packet))

    def _transmit(self, packet) -> None:
        start = self.scheduler.now
        self.medium.prune(start)
        tx_pos = self.src.position
        res = self.ctx.result(tx_pos, self.dst.position, self.tech.carrier_hz, self.tech.tx_power_dbm)
        signal = self.tech.tx_power_dbm - res.path_loss_db
        snr = sinr_db(signal, self.tech.noise_dbm)
        duration = round(8.0 * packet.size / _airtime_rate(self.tech, snr) * NS_PER_S)
        frame = Transmission(start, start + duration, self.src.name, tx_pos,
                             self.tech.tx_power_dbm, self.tech.carrier_hz, tag=self.reservation.slot)
        self.medium.add(frame)
        self.scheduler.schedule(duration, lambda _: self._finish(packet, frame, signal))
        self.reservation.after_transmission()

    def _finish(self, packet, frame: Transmission, signal: float) -> None:
        now = self.scheduler.now
        rx_pos = self.dst.position
        conflicts = self.medium.tagged_within(frame.tag, frame.start, self.period_ns, exclude=frame)
        interference = []
        for other in conflicts:
            if other.node == self.src.name:
                continue
            interference.append(
                self.ctx.received_dbm(other.pos, rx_pos, other.frequency_hz, other.eirp_dbm)
            )
        s = sinr_db(signal, self.tech.noise_dbm, interference)
        if s >= self.tech.sinr_threshold_db:
            self.stats.record_delivered(packet, now)
        else:
            self.stats.record_lost(packet, "slot_conflict" if interference else "sinr", now)


class RateServer:
    """FIFO rate-limited buffer whose service rate tracks the instantaneous link
    capacity; arrivals beyond the byte capacity are dropped."""

    def __init__(self, scheduler: Scheduler, ctx: RadioContext, tech: Technology,
                 tx: Terminal, tx_power_dbm: float, buffer_bytes: int):
        self.scheduler = scheduler
        self.ctx = ctx
        self.tech = tech
        self.tx = tx
        self.tx_power_dbm = tx_power_dbm
        self.buffer_bytes = buffer_bytes
        self.queue: deque = deque()
        self.queued_bytes = 0
        self.busy = False

    def enqueue(self, packet, rx: Terminal, on_done: Callable[[bool, str], None]) -> None:
        if self.queued_bytes + packet.size > self.buffer_bytes:
            on_done(False, "buffer_overflow")
            return
        self.queue.append((packet, rx, on_done))
        self.queued_bytes += packet.size
        if not self.busy:
            self._serve()

    def _serve(self) -> None:
        if not self.queue:
            self.busy = False
            return
        self.busy = True
        packet, rx, on_done = self.queue.popleft()
        self.queued_bytes -= packet.size
        res = self.ctx.result(self.tx.position, rx.position, self.tech.carrier_hz, self.tx_power_dbm)
        snr = sinr_db(self.tx_power_dbm - res.path_loss_db, self.tech.noise_dbm)
        duration = round(8.0 * packet.size / _airtime_rate(self.tech, snr) * NS_PER_S)
        ok = snr >= self.tech.sinr_threshold_db

        def finish(_):
            on_done(ok, "" if ok else "sinr")
            self._serve()

        self.scheduler.schedule(duration, finish)


class CellularInfrastructure:
    """One base station with its shared downlink server (centralized scheduling)."""

    def __init__(self, scheduler: Scheduler, ctx: RadioContext, tech: Technology, enb: Terminal):
        self.enb = enb
        self.downlink = RateServer(scheduler, ctx, tech, enb, tech.enb_tx_power_dbm, tech.buffer_bytes)


class CellularLink:
    """Scheduling-request/grant uplink into a rate-limited buffer, then a downlink
    leg from the base station. Resources are centrally scheduled, so cellular
    transmissions do not interfere with each other."""

    def __init__(self, scheduler: Scheduler, rng, ctx: RadioContext, tech: Technology,
                 infra: CellularInfrastructure, src: Terminal, dst: Terminal, stats):
        self.scheduler = scheduler
        self.rng = rng
        self.tech = tech
        self.infra = infra
        self.src = src
        self.dst = dst
        self.stats = stats
        if src.name == infra.enb.name:
            self.uplink = None
        else:
            self.uplink = RateServer(scheduler, ctx, tech, src, tech.tx_power_dbm, tech.buffer_bytes)

    def send(self, packet) -> None:
        if self.uplink is None:
            self.infra.downlink.enqueue(packet, self.dst, lambda ok, why: self._done(packet, ok, why))
            return
        grant_s = self.rng.uniform(self.tech.grant_delay_min_s, self.tech.grant_delay_max_s)
        self.scheduler.schedule(round(grant_s * NS_PER_S), lambda _: self._granted(packet))

    def _granted(self, packet) -> None:
        self.uplink.enqueue(packet, self.infra.enb, lambda ok, why: self._uplink_done(packet, ok, why))

    def _uplink_done(self, packet, ok: bool, why: str) -> None:
        if not ok:
            self.stats.record_lost(packet, why, self.scheduler.now)
            return
        self.infra.downlink.enqueue(packet, self.dst, lambda ok2, why2: self._done(packet, ok2, why2))

    def _done(self, packet, ok: bool, why: str) -> None:
        if ok:
            self.stats.record_delivered(packet, self.scheduler.now)
        else:
            self.stats.record_lost(packet, why, self.scheduler.now)


class MmWaveLink:
    """Directional link: geometric LOS beam alignment, both array gains applied,
    SINR-tested reception, serialization at the SINR-mapped capacity."""

    def __init__(self, scheduler: Scheduler, ctx: RadioContext, tech: Technology,
                 medium: Medium, src: Terminal, dst: Terminal, stats,
                 tx_frame: ArrayFrame | None = None, rx_frame: ArrayFrame | None = None,
                 buffer_bytes: int = 16_000_000):
        self.scheduler = scheduler
        self.ctx = ctx
        self.tech = tech
        self.medium = medium
        self.src = src
        self.dst = dst
        self.stats = stats
        self.tx_frame = tx_frame
        self.rx_frame = rx_frame
        self.config = tech.array_config()
        self.buffer_bytes = buffer_bytes
        self.queue: deque = deque()
        self.queued_bytes = 0
        self.busy = False
        self.misaligned_count = 0

    def send(self, packet) -> None:
        if self.queued_bytes + packet.size > self.buffer_bytes:
            self.stats.record_lost(packet, "buffer_overflow", self.scheduler.now)
            return
        self.queue.append(packet)
        self.queued_bytes += packet.size
        if not self.busy:
            self._serve()

    def _gains(self, tx_pos, rx_pos) -> tuple[float, float]:
        alignment = align_beams(tx_pos, rx_pos, self.config, self.config,
                                self.tx_frame, self.rx_frame)
        if alignment.tx_misaligned or alignment.rx_misaligned:
            self.misaligned_count += 1
        if self.tx_frame is None:
            g_tx = array_gain(self.config, alignment.tx_pointing, Pointing(0.0, 0.0))
        else:
            d = (rx_pos[0] - tx_pos[0], rx_pos[1] - tx_pos[1], rx_pos[2] - tx_pos[2])
            n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            look = self.tx_frame.local_pointing((d[0] / n, d[1] / n, d[2] / n))
            g_tx = array_gain(self.config, alignment.tx_pointing, look)
        if self.rx_frame is None:
            g_rx = array_gain(self.config, alignment.rx_pointing, Pointing(0.0, 0.0))
        else:
            d = (tx_pos[0] - rx_pos[0], tx_pos[1] - rx_pos[1], tx_pos[2] - rx_pos[2])
            n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            look = self.rx_frame.local_pointing((d[0] / n, d[1] / n, d[2] / n))
            g_rx = array_gain(self.config, alignment.rx_pointing, look)
        return g_tx, g_rx

    def _serve(self) -> None:
        if not self.queue:
            self.busy = False
            return
        self.busy = True
        packet = self.queue.popleft()
        self.queued_bytes -= packet.size
        start = self.scheduler.now
        self.medium.prune(start)
        tx_pos, rx_pos = self.src.position, self.dst.position
        g_tx, g_rx = self._gains(tx_pos, rx_pos)
        res = self.ctx.result(tx_pos, rx_pos, self.tech.carrier_hz,
                              self.tech.tx_power_dbm, g_tx, g_rx)
        signal = self.tech.tx_power_dbm + g_tx + g_rx - res.path_loss_db
        eirp = self.tech.tx_power_dbm + g_tx
        duration = round(
            8.0 * packet.size / _airtime_rate(self.tech, sinr_db(signal, self.tech.noise_dbm)) * NS_PER_S
        )
        frame = Transmission(start, start + duration, self.src.name, tx_pos, eirp, self.tech.carrier_hz)
        self.medium.add(frame)
        self.scheduler.schedule(duration, lambda _: self._finish(packet, frame, signal, g_rx))

    def _finish(self, packet, frame: Transmission, signal: float, g_rx: float) -> None:
        now = self.scheduler.now
        rx_pos = self.dst.position
        interference = [
            self.ctx.received_dbm(o.pos, rx_pos, o.frequency_hz, o.eirp_dbm, g_rx)
            for o in self.medium.overlapping(frame.start, frame.end, exclude=frame)
            if o.node != self.src.name and o.node != self.dst.name
        ]
        s = sinr_db(signal, self.tech.noise_dbm, interference)
        if s >= self.tech.sinr_threshold_db:
            self.stats.record_delivered(packet, now)
        else:
            self.stats.record_lost(packet, "sinr", now)
        self._serve()
