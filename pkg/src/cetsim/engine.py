"""Discrete-event kernel: virtual clock, (time, seq) event queue, labeled RNG streams."""

from __future__ import annotations

import enum
import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import CetError, NodeId

__all__ = [
    "EventKind",
    "Event",
    "EventHandle",
    "Trace",
    "Simulator",
    "SchedulingInPast",
    "rng_stream",
]


class SchedulingInPast(CetError):
    pass


class EventKind(enum.Enum):
    TRANSMIT_START = "TransmitStart"
    DELIVERED = "Delivered"
    COMPUTE_DONE = "ComputeDone"
    DECISION = "Decision"
    ATTACK_INJECTED = "AttackInjected"
    DEFENSE_TRIGGERED = "DefenseTriggered"


@dataclass(frozen=True, order=True)
class Event:
    time_s: float
    seq: int
    kind: EventKind = field(compare=False)
    node: NodeId = field(compare=False)
    detail: str = field(default="", compare=False)

    def to_record(self) -> str:
        return f"{self.time_s!r},{self.seq},{self.kind.value},{self.node},{self.detail}"

    @classmethod
    def from_record(cls, line: str) -> "Event":
        time_s, seq, kind, node, detail = line.split(",", 4)
        return cls(float(time_s), int(seq), EventKind(kind), int(node), detail)


@dataclass
class Trace:
    seed: int
    events: list[Event] = field(default_factory=list)

    def append(self, ev: Event) -> None:
        if self.events and ev.time_s < self.events[-1].time_s:
            raise CetError("trace time must be non-decreasing")
        self.events.append(ev)

    def extend(self, other: "Trace") -> None:
        for ev in other.events:
            self.append(ev)

    def of_kind(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def nodes(self) -> set[NodeId]:
        return {e.node for e in self.events}

    def to_text(self) -> str:
        """Newline-delimited ``time_s,seq,kind,node,detail`` records."""
        return "".join(e.to_record() + "\n" for e in self.events)

    @classmethod
    def from_text(cls, text: str, seed: int = 0) -> "Trace":
        return cls(seed, [Event.from_record(line) for line in text.splitlines() if line])

    def __len__(self) -> int:
        return len(self.events)


Action = Callable[["Simulator", Event], None]


class EventHandle:
    __slots__ = ("event", "cancelled", "fired")

    def __init__(self, event: Event):
        self.event = event
        self.cancelled = False
        self.fired = False


class Simulator:
    """Single-threaded event loop.

    Events fire in ``(time_s, seq)`` order; ``seq`` is the insertion counter,
    so events scheduled for the same instant fire in insertion order. An
    optional action attached to an event runs when it is dispatched and may
    schedule further events.
    """

    def __init__(self, seed: int = 0, start_time: float = 0.0):
        self.seed = seed
        self._now = float(start_time)
        self._queue: list[tuple[float, int, EventHandle, Optional[Action]]] = []
        self._seq = 0
        self.trace = Trace(seed)
        self.n_scheduled = 0
        self.n_dispatched = 0
        self.n_cancelled = 0

    @property
    def now(self) -> float:
        return self._now

    @property
    def n_pending(self) -> int:
        return self.n_scheduled - self.n_dispatched - self.n_cancelled

    def schedule(
        self,
        ev_time: float,
        kind: EventKind,
        node: NodeId,
        detail: str = "",
        action: Optional[Action] = None,
    ) -> EventHandle:
        if ev_time < self._now:
            raise SchedulingInPast(f"cannot schedule at {ev_time!r} < now {self._now!r}")
        if "\n" in detail or "," in detail:
            raise ValueError("event detail must not contain commas or newlines")
        ev = Event(float(ev_time), self._seq, kind, node, detail)
        self._seq += 1
        handle = EventHandle(ev)
        heapq.heappush(self._queue, (ev.time_s, ev.seq, handle, action))
        self.n_scheduled += 1
        return handle

    def cancel(self, handle: EventHandle) -> bool:
        if handle.fired or handle.cancelled:
            return False
        handle.cancelled = True
        self.n_cancelled += 1
        return True

    def _pop_live(self, t_end: float):
        while self._queue:
            t, _, handle, action = self._queue[0]
            if handle.cancelled:
                heapq.heappop(self._queue)
                continue
            if t > t_end:
                return None
            heapq.heappop(self._queue)
            return handle, action
        return None

    def run_until(self, t_end: float) -> Trace:
        """Dispatch every event with time <= ``t_end``; the clock ends at ``t_end``."""
        if t_end < self._now:
            raise SchedulingInPast(f"run_until({t_end!r}) is before now {self._now!r}")
        self._drain(t_end)
        self._now = max(self._now, float(t_end))
        return self.trace

    def run(self) -> Trace:
        """Dispatch until the queue is empty; the clock stays at the last event."""
        self._drain(float("inf"))
        return self.trace

    def _drain(self, t_end: float) -> None:
        while (item := self._pop_live(t_end)) is not None:
            handle, action = item
            ev = handle.event
            self._now = ev.time_s
            handle.fired = True
            self.n_dispatched += 1
            self.trace.append(ev)
            if action is not None:
                action(self, ev)


def _label_key(label: str) -> tuple[int, ...]:
    digest = hashlib.sha256(label.encode()).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4))


def rng_stream(label: str, seed: int) -> np.random.Generator:
    """Independent generator for ``(seed, label)``.

    The label is hashed into the spawn key of a :class:`numpy.random.SeedSequence`,
    so new consumers with new labels never perturb existing streams.
    """
    if not label:
        raise ValueError("rng stream label must be non-empty")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(label))
    return np.random.Generator(np.random.PCG64(ss))
