"""Deterministic discrete-event engine: clock, ordered event queue, named RNG streams.

A single simulation run is strictly single-threaded.  Reproducibility rests on
two rules: events at equal timestamps dequeue in insertion order, and every
random draw comes from a labelled stream whose seed depends only on the master
seed and the stream coordinates (label, actor, fading block), never on the
order in which other streams are consumed.
"""

from __future__ import annotations

import heapq
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import SimulationError

#: Stream labels reserved by the simulator.  Protocol choice must never change
#: which "channel" values a run observes, so channel draws get their own label.
STREAM_LABELS = ("channel", "backoff", "rl", "scheduler")

_MIX_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL1 = 0xBF58476D1CE4E5B9
_MIX_MUL2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + _MIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX_MUL1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_MUL2) & _MASK64
    return x ^ (x >> 31)


def _stream_key(master_seed: int, label: str, actor: int, block: int) -> int:
    """128-bit Philox key from the stream coordinates (platform independent)."""
    h = _splitmix64(master_seed & _MASK64)
    for part in (zlib.crc32(label.encode("ascii")), actor + 1, block + 1):
        h = _splitmix64(h ^ (part & _MASK64))
    lo = h
    hi = _splitmix64(h)
    return (hi << 64) | lo


class RngStreams:
    """Named, mutually independent random streams derived from one master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._streams: dict[tuple[str, int], np.random.Generator] = {}

    def stream(self, label: str, actor: int = 0) -> np.random.Generator:
        """Sequentially-consumed stream for (label, actor); memoized per run."""
        key = (label, actor)
        gen = self._streams.get(key)
        if gen is None:
            gen = np.random.Generator(
                np.random.Philox(key=_stream_key(self.master_seed, label, actor, 0))
            )
            self._streams[key] = gen
        return gen

    def block_stream(self, label: str, actor: int, block: int) -> np.random.Generator:
        """Fresh generator for one (actor, fading-block) cell.

        Values depend only on the coordinates, so any protocol sampling the
        same cell sees the same draws regardless of when it asks.
        """
        return np.random.Generator(
            np.random.Philox(key=_stream_key(self.master_seed, label, actor, block + 1))
        )


@dataclass(order=False)
class Event:
    time: float
    sequence: int
    kind: str
    actor: Any = None
    fn: Optional[Callable[["Simulation", "Event"], None]] = None
    payload: Any = None


class EventQueue:
    """Time-ordered queue with stable FIFO tie-breaking at equal timestamps."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, Event]] = []
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, event: Event) -> None:
        event.sequence = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, (event.time, event.sequence, event))

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> float:
        return self._heap[0][0]


def schedule_event(queue: EventQueue, event: Event, now: float = 0.0) -> EventQueue:
    """Insert an event; scheduling before `now` signals a protocol-logic bug."""
    if event.time < now:
        raise SimulationError(
            f"event {event.kind!r} scheduled at t={event.time} before clock t={now}"
        )
    queue.push(event)
    return queue


class Simulation:
    """Run state: clock, event queue, RNG streams and a metrics recorder."""

    def __init__(self, seed: int, recorder=None):
        self.clock = 0.0
        self.queue = EventQueue()
        self.rng = RngStreams(seed)
        self.recorder = recorder

    def schedule(self, time: float, kind: str, actor: Any = None,
                 fn: Optional[Callable] = None, payload: Any = None) -> Event:
        event = Event(time=time, sequence=-1, kind=kind, actor=actor, fn=fn,
                      payload=payload)
        schedule_event(self.queue, event, self.clock)
        return event

    def run_to_completion(self, horizon: float) -> float:
        """Process all events with time <= horizon; returns the final clock.

        The clock ends at min(horizon, last processed event time): a run whose
        queue drains early stops there, an ongoing run stops at the horizon.
        """
        if horizon <= 0:
            raise SimulationError(f"horizon must be positive, got {horizon}")
        while len(self.queue) and self.queue.peek_time() <= horizon:
            event = self.queue.pop()
            if event.time < self.clock:
                raise SimulationError(
                    f"clock would move backwards: event {event.kind!r} at "
                    f"t={event.time} < clock {self.clock}")
            self.clock = event.time
            if event.fn is not None:
                try:
                    event.fn(self, event)
                except SimulationError:
                    raise
                except Exception as exc:
                    raise SimulationError(
                        f"handler failed for event kind={event.kind!r} "
                        f"actor={event.actor!r} t={event.time}: {exc}") from exc
        if len(self.queue):
            self.clock = horizon
        return self.clock
