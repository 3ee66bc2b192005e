"""Deterministic discrete-event core: integer-nanosecond clock, scheduler, labeled RNG streams."""

from __future__ import annotations

import heapq
import time as _walltime
from dataclasses import dataclass
from hashlib import blake2b
from typing import Any, Callable

import numpy as np

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000


def seconds(x: float) -> int:
    """Convert seconds to integer-nanosecond sim time."""
    return round(x * NS_PER_S)


def millis(x: float) -> int:
    return round(x * NS_PER_MS)


def micros(x: float) -> int:
    return round(x * NS_PER_US)


def to_seconds(t: int) -> float:
    return t / NS_PER_S


class SimulationError(RuntimeError):
    """A handler failed; carries the sim time at which it happened."""


class Event:
    """A scheduled callback. Returned by Scheduler.schedule as a cancellation handle."""

    __slots__ = ("fire_time", "sequence_id", "handler", "payload", "cancelled", "fired")

    def __init__(self, fire_time: int, sequence_id: int, handler: Callable[[Any], None], payload: Any):
        self.fire_time = fire_time
        self.sequence_id = sequence_id
        self.handler = handler
        self.payload = payload
        self.cancelled = False
        self.fired = False


@dataclass
class RunReport:
    events_processed: int
    end_time: int
    wall_seconds: float


class Scheduler:
    """Single-threaded event loop over a binary heap keyed on (fire_time, sequence_id).

    Cancellation uses tombstone flags discarded lazily at pop. The clock is an
    integer nanosecond count and never decreases while handlers run.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._now = 0
        self._finished = False

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, delay: int, handler: Callable[[Any], None], payload: Any = None) -> Event:
        """Enqueue `handler` to run `delay` ns from now. Returns a handle for cancel()."""
        if delay < 0:
            raise ValueError(f"negative delay {delay}")
        if self._finished:
            raise SimulationError("cannot schedule after the run finished")
        ev = Event(self._now + delay, self._seq, handler, payload)
        self._seq += 1
        heapq.heappush(self._heap, (ev.fire_time, ev.sequence_id, ev))
        return ev

    def schedule_at(self, fire_time: int, handler: Callable[[Any], None], payload: Any = None) -> Event:
        return self.schedule(max(0, fire_time - self._now), handler, payload)

    def cancel(self, event: Event) -> bool:
        """True iff the event existed and had not yet fired. Idempotent."""
        if event.fired or event.cancelled:
            return False
        event.cancelled = True
        return True

    def run(self, until: int) -> RunReport:
        """Process events in (fire_time, sequence_id) order until the queue empties
        or the next event lies beyond `until`. Later events are left unfired."""
        start_wall = _walltime.perf_counter()
        processed = 0
        heap = self._heap
        while heap:
            fire_time, _, ev = heap[0]
            if fire_time > until:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            self._now = fire_time
            ev.fired = True
            try:
                ev.handler(ev.payload)
            except Exception as exc:
                raise SimulationError(
                    f"handler failed at t={to_seconds(fire_time):.9f} s: {exc!r}"
                ) from exc
            processed += 1
        self._now = max(self._now, until)
        self._finished = True
        return RunReport(processed, self._now, _walltime.perf_counter() - start_wall)


def _stream_key(seed: int, label: str) -> np.ndarray:
    digest = blake2b(label.encode(), digest_size=16, key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")).digest()
    return np.frombuffer(digest, dtype=np.uint64)


class RandomStreams:
    """Labeled, mutually independent generators fanned out from one root seed.

    Each (seed, label) pair maps to a fixed Philox key, so adding a new consumer
    label never perturbs the draw sequence of existing streams.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, label: str) -> np.random.Generator:
        gen = self._streams.get(label)
        if gen is None:
            gen = np.random.Generator(np.random.Philox(key=_stream_key(self.seed, label)))
            self._streams[label] = gen
        return gen
