"""Seeded fault plans: chunk loss, silent bit flips, delays, class pauses and
writer/reader interleavings.

Every decision is a pure function of the plan's seed and the identifiers of
the thing being decided about; nothing here holds mutable state.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Union

import numpy as np

from . import kernels
from .errors import OutOfRange, TooLarge
from .hashing import loss_threshold, stream_key, uniform53, uniform_int

# attempt-slot tags that keep auxiliary streams disjoint from loss passes
TAG_VISIBILITY = 1 << 62
TAG_JITTER = (1 << 62) + 1
TAG_SCHEDULE = (1 << 62) + 2
TAG_REFLECT = 1 << 61

MAX_ENUM_LINES = 6
MAX_ENUM_PASSES = 2


@dataclass(frozen=True)
class DelaySpec:
    """Constant (``lo == hi``) or uniform integer range of ticks."""

    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"bad delay range {self.lo}..{self.hi}")

    @classmethod
    def constant(cls, ticks: int) -> "DelaySpec":
        return cls(ticks, ticks)

    @property
    def is_constant(self) -> bool:
        return self.lo == self.hi

    def sample(self, seed: int, op_id: int, tag: int) -> int:
        if self.is_constant:
            return self.lo
        return uniform_int(stream_key(seed, op_id, tag), 0, self.lo, self.hi)

    def __str__(self) -> str:
        return str(self.lo) if self.is_constant else f"{self.lo}..{self.hi}"


class SdcFlip(NamedTuple):
    op_id: int
    chunk_index: int
    bit_index: int


class Pause(NamedTuple):
    priority_class: int
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


ENUMERATE_ALL = "enumerate-all"


@dataclass(frozen=True)
class FaultPlan:
    seed: int = 0
    chunk_loss_rate: float = 0.0
    sdc_flips: tuple = ()
    visibility_delay: DelaySpec = DelaySpec()
    pauses: tuple = ()
    interleavings: Union[None, str, tuple] = None
    # explicit first-pass drops, for exact-count experiments
    drop_chunks: frozenset = frozenset()
    # per-op extra wire latency; exercises completion ordering rules
    wire_jitter: DelaySpec = DelaySpec()
    _threshold: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_threshold", loss_threshold(self.chunk_loss_rate))

    def flips_for(self, op_id: int) -> list[SdcFlip]:
        return [f for f in self.sdc_flips if f.op_id == op_id]


def decide_loss(plan: FaultPlan, op_id: int, chunk_index: int, attempt: int = 0) -> bool:
    """Whether ``chunk_index`` of ``op_id`` is dropped on transmission pass ``attempt``."""
    if attempt == 0 and (op_id, chunk_index) in plan.drop_chunks:
        return True
    if plan._threshold == 0:
        return False
    return uniform53(stream_key(plan.seed, op_id, attempt), chunk_index) < plan._threshold


def lost_chunks(plan: FaultPlan, op_id: int, n_chunks: int, attempt: int = 0,
                indices: Optional[np.ndarray] = None) -> list[int]:
    """All lost chunk indices of one pass, in ascending order.

    With ``indices`` only those chunks are considered (selective resends).
    """
    key = stream_key(plan.seed, op_id, attempt)
    if indices is None:
        lost = set()
        if plan._threshold:
            lost.update(int(i) for i in kernels.lost_indices(key, 0, n_chunks, plan._threshold))
        if attempt == 0:
            lost.update(c for o, c in plan.drop_chunks if o == op_id and 0 <= c < n_chunks)
        return sorted(lost)
    return [int(i) for i in indices if decide_loss(plan, op_id, int(i), attempt)]


def corrupt(payload: bytes, bit_index: int) -> bytes:
    """Invert one bit; bit ``k`` is bit ``k % 8`` (LSB first) of byte ``k // 8``."""
    if not 0 <= bit_index < 8 * len(payload):
        raise OutOfRange(f"bit {bit_index} outside {len(payload)}-byte payload")
    out = bytearray(payload)
    out[bit_index // 8] ^= 1 << (bit_index % 8)
    return bytes(out)


def pause_class(plan: FaultPlan, priority_class: int, now: int) -> int:
    """Extra ticks a completion due at ``now`` on ``priority_class`` must wait."""
    t = now
    moved = True
    while moved:
        moved = False
        for p in plan.pauses:
            if p.priority_class == priority_class and p.start <= t < p.end:
                t = p.end
                moved = True
    return t - now


def visibility_delay(plan: FaultPlan, op_id: int) -> int:
    return plan.visibility_delay.sample(plan.seed, op_id, TAG_VISIBILITY)


def wire_jitter(plan: FaultPlan, op_id: int) -> int:
    return plan.wire_jitter.sample(plan.seed, op_id, TAG_JITTER)


# -- interleavings --------------------------------------------------------

class Actor(str, Enum):
    WRITER = "writer"
    READER = "reader"


class Step(NamedTuple):
    actor: Actor
    line_index: int


InterleavingSchedule = tuple  # tuple[Step, ...]


def interleaving_count(writer_lines: int, reader_passes: int) -> int:
    return math.comb(writer_lines * (1 + reader_passes), writer_lines)


def _build(n: int, p: int, writer_slots) -> InterleavingSchedule:
    total = n * (1 + p)
    slots = set(writer_slots)
    steps = []
    w = r = 0
    for pos in range(total):
        if pos in slots:
            steps.append(Step(Actor.WRITER, w))
            w += 1
        else:
            steps.append(Step(Actor.READER, r % n))
            r += 1
    return tuple(steps)


def enumerate_interleavings(writer_lines: int, reader_passes: int) -> Iterator[InterleavingSchedule]:
    """Every merge of the writer's ascending line writes with ``reader_passes``
    ascending reader passes over the same lines."""
    n, p = writer_lines, reader_passes
    if n < 1 or p < 1:
        raise ValueError("need at least one line and one reader pass")
    if n > MAX_ENUM_LINES or p > MAX_ENUM_PASSES:
        raise TooLarge(f"exhaustive enumeration limited to {MAX_ENUM_LINES} lines x {MAX_ENUM_PASSES} passes")
    for slots in itertools.combinations(range(n * (1 + p)), n):
        yield _build(n, p, slots)


def random_interleaving(writer_lines: int, reader_passes: int, seed: int, index: int) -> InterleavingSchedule:
    """One uniformly chosen schedule, deterministic in ``(seed, index)``."""
    n, p = writer_lines, reader_passes
    total = n * (1 + p)
    key = stream_key(seed, index, TAG_SCHEDULE)
    # seeded Fisher-Yates over slot positions, keep the first n
    pos = list(range(total))
    for i in range(total - 1, 0, -1):
        j = uniform_int(key, i, 0, i)
        pos[i], pos[j] = pos[j], pos[i]
    return _build(n, p, pos[:n])


def validate_schedule(schedule: InterleavingSchedule, writer_lines: int, reader_passes: int) -> bool:
    writes = [s.line_index for s in schedule if s.actor == Actor.WRITER]
    reads = [s.line_index for s in schedule if s.actor == Actor.READER]
    expected_reads = list(range(writer_lines)) * reader_passes
    return writes == list(range(writer_lines)) and reads == expected_reads
