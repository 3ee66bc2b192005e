"""Traffic sources (periodic CAM and constant-bitrate flows) and per-flow metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..core import NS_PER_S, Scheduler, to_seconds

RATE_WINDOW_S = 0.5


@dataclass
class Packet:
    id: int
    size: int  # bytes
    created: int  # ns
    src: str
    dst: str
    flow: str


@dataclass
class FlowStats:
    """Counters, delay samples, and the delivered-bytes time series for one flow."""

    name: str
    technology: str = ""
    sent: int = 0
    delivered: int = 0
    lost: int = 0
    delays_s: list[float] = field(default_factory=list)
    deliveries: list[tuple[float, int]] = field(default_factory=list)  # (time s, bytes)
    packet_rows: list[tuple] = field(default_factory=list)

    def record_sent(self, packet: Packet) -> None:
        self.sent += 1

    def record_delivered(self, packet: Packet, now: int) -> None:
        self.delivered += 1
        delay = to_seconds(now - packet.created)
        self.delays_s.append(delay)
        self.deliveries.append((to_seconds(now), packet.size))
        self.packet_rows.append(
            (self.name, packet.id, to_seconds(packet.created), "delivered", "", to_seconds(now), delay)
        )

    def record_lost(self, packet: Packet, reason: str, now: int) -> None:
        self.lost += 1
        self.packet_rows.append(
            (self.name, packet.id, to_seconds(packet.created), "lost", reason, "", "")
        )

    @property
    def pdr(self) -> float | None:
        if self.sent == 0:
            return None
        return self.delivered / self.sent


def _percentile(sorted_vals: list[float], q: float) -> float:
    if not sorted_vals:
        return math.nan
    idx = q * (len(sorted_vals) - 1)
    lo = int(idx)
    hi = min(lo + 1, len(sorted_vals) - 1)
    frac = idx - lo
    return sorted_vals[lo] * (1 - frac) + sorted_vals[hi] * frac


def collect_stats(stats: FlowStats, duration_s: float, warmup_s: float = 0.0) -> dict:
    """Summarize a flow: PDR, delay statistics, windowed and mean data rate."""
    delays = sorted(stats.delays_s)
    series: list[tuple[float, float]] = []
    if duration_s > warmup_s:
        n_bins = max(1, int(math.ceil((duration_s - warmup_s) / RATE_WINDOW_S)))
        bins = [0] * n_bins
        for t, size in stats.deliveries:
            if t < warmup_s or t > duration_s:
                continue
            k = min(int((t - warmup_s) / RATE_WINDOW_S), n_bins - 1)
            bins[k] += size
        series = [(warmup_s + (k + 0.5) * RATE_WINDOW_S, b * 8.0 / RATE_WINDOW_S) for k, b in enumerate(bins)]
    payload_bits = sum(size * 8 for t, size in stats.deliveries if warmup_s <= t <= duration_s)
    mean_rate = payload_bits / (duration_s - warmup_s) if duration_s > warmup_s else 0.0
    return {
        "flow": stats.name,
        "technology": stats.technology,
        "sent": stats.sent,
        "delivered": stats.delivered,
        "lost": stats.lost,
        "pdr": stats.pdr,
        "delay_mean_s": sum(delays) / len(delays) if delays else math.nan,
        "delay_median_s": _percentile(delays, 0.5),
        "delay_p95_s": _percentile(delays, 0.95),
        "mean_rate_bps": mean_rate,
        "rate_series": series,
    }


def cam_source(scheduler: Scheduler, link, stats: FlowStats, src: str, dst: str,
               interval_s: float, size_bytes: int, phase_s: float = 0.0,
               jitter_s: float = 0.0, rng=None) -> None:
    """Periodic awareness-message flow; the first packet is created one interval
    after the flow's phase offset, then every interval until the run ends.

    `jitter_s` adds a uniform per-packet generation dither inside the period,
    modeling that awareness messages are not clock-aligned across senders.
    """
    if interval_s <= 0:
        raise ValueError("interval must be positive")
    if jitter_s > 0 and rng is None:
        raise ValueError("jitter needs an rng")
    interval_ns = round(interval_s * NS_PER_S)
    counter = {"n": 0}

    def emit(_):
        if jitter_s > 0.0:
            delay = round(float(rng.uniform(0.0, jitter_s)) * NS_PER_S)
            scheduler.schedule(delay, create)
        else:
            create(None)

    def create(_):
        packet = Packet(counter["n"], size_bytes, scheduler.now, src, dst, stats.name)
        counter["n"] += 1
        stats.record_sent(packet)
        link.send(packet)

    def grid(_):
        emit(None)
        scheduler.schedule(interval_ns, grid)

    scheduler.schedule(round(phase_s * NS_PER_S) + interval_ns, grid)


def cbr_source(scheduler: Scheduler, link, stats: FlowStats, src: str, dst: str,
               rate_bps: float, size_bytes: int, phase_s: float = 0.0) -> None:
    """Constant-bitrate flow with a drift-free inter-packet gap of 8*size/rate."""
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    gap_s = 8.0 * size_bytes / rate_bps
    phase_ns = round(phase_s * NS_PER_S)
    counter = {"n": 0}

    def emit(_):
        packet = Packet(counter["n"], size_bytes, scheduler.now, src, dst, stats.name)
        counter["n"] += 1
        stats.record_sent(packet)
        link.send(packet)
        # schedule from the exact grid to keep the offered load byte-accurate
        next_t = phase_ns + round((counter["n"] + 1) * gap_s * NS_PER_S)
        scheduler.schedule_at(next_t, emit)

    scheduler.schedule_at(phase_ns + round(gap_s * NS_PER_S), emit)
