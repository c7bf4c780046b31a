"""Discrete-event engine, stage timelines and the remote memory model.

Time is an integer tick count. Events scheduled for the same tick fire in
insertion order, so a run is fully determined by its inputs.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional

from .errors import DuplicateStage, PastEvent, StageRegression

Tick = int


class Stage(IntEnum):
    SUBMISSION = 0
    PLACEMENT = 1
    TRANSMISSION = 2
    REMOTE_PLACEMENT = 3
    COMPLETION = 4
    VISIBILITY = 5
    SEMANTIC_AGREEMENT = 6

    @property
    def label(self) -> str:
        return f"T{int(self)}"


class EventKind(str, Enum):
    SUBMIT = "submit"
    PLACEMENT = "placement"
    TRANSMISSION = "transmission"
    REMOTE_PLACEMENT = "remote-placement"
    COMPLETION = "completion"
    VISIBILITY = "visibility"
    LINE_VISIBLE = "line-visible"
    AGREEMENT = "agreement"
    RETRANSMIT = "retransmit"
    ATOMIC = "atomic"
    INTEGRATE = "integrate"
    REFLECT = "reflect"
    REFLECT_TIMEOUT = "reflect-timeout"
    WRITER_STEP = "writer-step"
    READER_STEP = "reader-step"
    SIGNAL = "signal"
    MARK = "mark"


@dataclass
class StageTimeline:
    """Ticks at which one operation reached each of the seven stages."""

    op_id: int
    ticks: list = field(default_factory=lambda: [None] * 7)
    # receiver-side integration tick; t6 itself is the sender's commit tick
    integrated_at: Optional[Tick] = None

    def __getitem__(self, stage: int) -> Optional[Tick]:
        return self.ticks[stage]

    t0 = property(lambda self: self.ticks[0])
    t1 = property(lambda self: self.ticks[1])
    t2 = property(lambda self: self.ticks[2])
    t3 = property(lambda self: self.ticks[3])
    t4 = property(lambda self: self.ticks[4])
    t5 = property(lambda self: self.ticks[5])
    t6 = property(lambda self: self.ticks[6])

    def has(self, stage: int) -> bool:
        return self.ticks[stage] is not None

    def record(self, stage: int, at: Tick) -> None:
        stage = Stage(stage)
        if self.ticks[stage] is not None:
            raise DuplicateStage(f"op {self.op_id}: {stage.label} already recorded at {self.ticks[stage]}")
        for i, t in enumerate(self.ticks):
            if t is None:
                continue
            if (i < stage and at < t) or (i > stage and at > t):
                raise StageRegression(
                    f"op {self.op_id}: {stage.label}={at} conflicts with T{i}={t}"
                )
        self.ticks[stage] = at

    def is_monotone(self) -> bool:
        present = [t for t in self.ticks if t is not None]
        return all(a <= b for a, b in zip(present, present[1:]))


def gaps(tl: StageTimeline) -> tuple[Optional[int], Optional[int]]:
    """Return ``(t5 - t4, t6 - t4)``; each is None unless both ends exist."""
    t4, t5, t6 = tl.ticks[4], tl.ticks[5], tl.ticks[6]
    vis = t5 - t4 if t4 is not None and t5 is not None else None
    sem = t6 - t4 if t4 is not None and t6 is not None else None
    return vis, sem


@dataclass(frozen=True)
class Event:
    fire_at: Tick
    kind: EventKind
    subject: int


class TraceRecord(NamedTuple):
    tick: Tick
    op_id: int
    kind: str
    detail: str

    def line(self) -> str:
        return f"{self.tick}\t{self.op_id}\t{self.kind}\t{self.detail}\n"


Action = Callable[[], Optional[str]]


class Simulator:
    """Single-threaded event loop with a shared timeline registry and trace."""

    def __init__(self) -> None:
        self.clock: Tick = 0
        self._queue: list = []
        self._seq = itertools.count()
        self._op_ids = itertools.count(1)
        self.timelines: dict[int, StageTimeline] = {}
        self.trace: list[TraceRecord] = []

    # -- scheduling ------------------------------------------------------
    def schedule(self, event: Event, action: Optional[Action] = None) -> None:
        if event.fire_at < self.clock:
            raise PastEvent(f"event at {event.fire_at} scheduled with clock at {self.clock}")
        heapq.heappush(self._queue, (event.fire_at, next(self._seq), event, action))

    def at(self, tick: Tick, kind: EventKind, subject: int, action: Optional[Action] = None) -> None:
        self.schedule(Event(tick, kind, subject), action)

    def after(self, delay: int, kind: EventKind, subject: int, action: Optional[Action] = None) -> None:
        self.schedule(Event(self.clock + delay, kind, subject), action)

    def pending(self) -> int:
        return len(self._queue)

    def _fire(self) -> None:
        fire_at, _, event, action = heapq.heappop(self._queue)
        self.clock = fire_at
        detail = action() if action is not None else None
        self.trace.append(TraceRecord(fire_at, event.subject, event.kind.value, detail or ""))

    def run_until(self, deadline: Tick) -> int:
        fired = 0
        while self._queue and self._queue[0][0] <= deadline:
            self._fire()
            fired += 1
        self.clock = max(self.clock, deadline)
        return fired

    def run(self, max_events: Optional[int] = None) -> int:
        """Run to quiescence."""
        fired = 0
        while self._queue:
            if max_events is not None and fired >= max_events:
                break
            self._fire()
            fired += 1
        return fired

    # -- timelines -------------------------------------------------------
    def new_op(self) -> int:
        op_id = next(self._op_ids)
        self.timelines[op_id] = StageTimeline(op_id)
        return op_id

    def timeline(self, op_id: int) -> StageTimeline:
        return self.timelines.setdefault(op_id, StageTimeline(op_id))

    def record_stage(self, op_id: int, stage: int, at: Optional[Tick] = None) -> None:
        self.timeline(op_id).record(stage, self.clock if at is None else at)

    # -- trace I/O -------------------------------------------------------
    def trace_text(self) -> str:
        return "".join(r.line() for r in self.trace)

    def write_trace(self, path: str | Path) -> None:
        Path(path).write_text(self.trace_text(), encoding="utf-8", newline="\n")


@dataclass(frozen=True)
class CacheLine:
    placed: bytes
    visible: bytes
    visible_at: Optional[Tick]


class RemoteMemory:
    """Byte-addressed remote memory split into cache lines.

    NIC DMA lands in ``placed``; the remote CPU only ever reads ``visible``.
    A line's placed bytes are copied to ``visible`` by :meth:`promote`.
    """

    def __init__(self, size_bytes: int, line_size_bytes: int = 64) -> None:
        if line_size_bytes <= 0:
            raise ValueError("line size must be positive")
        n_lines = -(-size_bytes // line_size_bytes)
        self.line_size = line_size_bytes
        self.size = n_lines * line_size_bytes
        self.placed = bytearray(self.size)
        self.visible = bytearray(self.size)
        self.visible_at: list[Optional[Tick]] = [None] * n_lines
        self.unpromoted: set[int] = set()
        self._regions: list[tuple[int, int]] = []

    @property
    def n_lines(self) -> int:
        return len(self.visible_at)

    def line(self, i: int) -> CacheLine:
        lo, hi = i * self.line_size, (i + 1) * self.line_size
        return CacheLine(bytes(self.placed[lo:hi]), bytes(self.visible[lo:hi]), self.visible_at[i])

    @property
    def lines(self) -> list[CacheLine]:
        return [self.line(i) for i in range(self.n_lines)]

    # registration
    def register(self, offset: int, length: int) -> None:
        if offset < 0 or offset + length > self.size:
            raise ValueError("region outside memory")
        self._regions.append((offset, offset + length))

    def is_registered(self, offset: int, length: int) -> bool:
        return any(lo <= offset and offset + length <= hi for lo, hi in self._regions)

    def lines_touched(self, offset: int, length: int) -> range:
        if length <= 0:
            return range(0)
        return range(offset // self.line_size, (offset + length - 1) // self.line_size + 1)

    # NIC side
    def place(self, offset: int, data: bytes) -> range:
        self.placed[offset:offset + len(data)] = data
        touched = self.lines_touched(offset, len(data))
        self.unpromoted.update(touched)
        return touched

    def nic_read(self, offset: int, length: int) -> bytes:
        return bytes(self.placed[offset:offset + length])

    # coherence
    def promote(self, lines: Iterable[int], at: Tick) -> None:
        for i in lines:
            lo, hi = i * self.line_size, (i + 1) * self.line_size
            self.visible[lo:hi] = self.placed[lo:hi]
            self.visible_at[i] = at
            self.unpromoted.discard(i)

    # CPU side
    def cpu_read(self, offset: int, length: int) -> bytes:
        return bytes(self.visible[offset:offset + length])
