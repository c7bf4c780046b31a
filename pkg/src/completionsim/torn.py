"""Writer/reader races over multi-unit objects.

A writer replaces an object one atomic unit at a time while a reader (or a
receiver assembling the object) reads it unit by unit. Each schedule fixes
one interleaving; provenance is tracked from the schedule itself, not from
byte contents, so "torn" means exactly "saw units from both versions".
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .engine import RemoteMemory, Simulator
from .faults import (
    MAX_ENUM_LINES,
    Actor,
    enumerate_interleavings,
    interleaving_count,
    random_interleaving,
)
from .errors import TornReadUnresolved
from .farm import VersionedObject, farm_read, farm_read_attempt, farm_write_steps
from .layout import LINE, DhtEntry, encode_versioned, versioned_line_count
from .oae import LinkState, OaeConfig, OaeEndpoint, invariant
from .verbs import Nic, Transport


def schedules(n_units: int, reader_passes: int, seed: int = 0, limit: int = 20000,
              mode: str = "auto") -> Iterator[tuple]:
    """Exhaustive schedules when small enough (or ``mode='enumerate'``),
    else ``limit`` seeded random ones."""
    small = n_units <= MAX_ENUM_LINES and interleaving_count(n_units, reader_passes) <= limit
    if mode == "enumerate" or (mode == "auto" and small):
        yield from enumerate_interleavings(n_units, reader_passes)
        return
    for i in range(limit):
        yield random_interleaving(n_units, reader_passes, seed, i)


@dataclass(frozen=True)
class PlainOutcome:
    snapshot: bytes
    torn: bool
    new_units: int


class PlainRacer:
    """Unversioned reader racing a unit-by-unit overwrite of ``old`` with ``new``."""

    def __init__(self, old: bytes, new: bytes, unit: int):
        if len(old) != len(new):
            raise ValueError("versions must have equal size")
        self.old, self.new, self.unit = old, new, unit
        self.buf = bytearray(old)
        self.out = bytearray(len(old))
        self.written: set = set()
        self.seen = self.seen_new = 0

    def step(self, step) -> str:
        lo = step.line_index * self.unit
        hi = min(len(self.old), lo + self.unit)
        if step.actor == Actor.WRITER:
            self.buf[lo:hi] = self.new[lo:hi]
            self.written.add(step.line_index)
            return f"write unit {step.line_index}"
        self.out[lo:hi] = self.buf[lo:hi]
        self.seen += 1
        fresh = step.line_index in self.written
        self.seen_new += fresh
        return f"read unit {step.line_index} {'new' if fresh else 'old'}"

    def finish(self) -> PlainOutcome:
        return PlainOutcome(bytes(self.out), 0 < self.seen_new < self.seen, self.seen_new)


def plain_race(schedule: tuple, old: bytes, new: bytes, unit: int) -> PlainOutcome:
    racer = PlainRacer(old, new, unit)
    for step in schedule:
        racer.step(step)
    return racer.finish()


def plain_race_fast(schedule: tuple) -> tuple[bool, int]:
    """Provenance-only version of :func:`plain_race` (no bytes)."""
    written = set()
    seen_new = seen = 0
    for step in schedule:
        if step.actor == Actor.WRITER:
            written.add(step.line_index)
        else:
            seen += 1
            seen_new += step.line_index in written
    return 0 < seen_new < seen, seen_new


def dht_versions(v_old: int = 1, v_new: int = 2) -> tuple[bytes, bytes]:
    return DhtEntry.make(v_old).pack(), DhtEntry.make(v_new).pack()


@dataclass(frozen=True)
class FarmOutcome:
    torn_attempt: bool
    data: bytes
    version: int
    retries: int


class FarmRacer:
    """First read attempt interleaved step by step with a versioned write.

    Retries (if any) run in :meth:`finish`, after the writer is done, since a
    schedule contains every writer step.
    """

    def __init__(self, old_payload: bytes, new_payload: bytes, v_old: int, max_retries: int = 16):
        self.obj = VersionedObject.allocate(old_payload, v_old)
        self.writer = farm_write_steps(self.obj, new_payload, v_old + 1)
        self.reader = farm_read_attempt(self.obj)
        self.max_retries = max_retries
        self.attempt = None

    def _advance(self, gen) -> None:
        try:
            next(gen)
        except StopIteration as stop:
            if gen is self.reader:
                self.attempt = stop.value

    def step(self, step) -> str:
        writer = step.actor == Actor.WRITER
        self._advance(self.writer if writer else self.reader)
        return f"{'write line' if writer else 'read'} {step.line_index}"

    def finish(self) -> FarmOutcome:
        for gen in (self.writer, self.reader):
            try:
                while True:
                    next(gen)
            except StopIteration as stop:
                if gen is self.reader and self.attempt is None:
                    self.attempt = stop.value
        if self.attempt.consistent:
            return FarmOutcome(False, self.attempt.data, self.attempt.version, 0)
        if self.max_retries == 0:
            raise TornReadUnresolved(1)
        res = farm_read(self.obj, self.max_retries - 1)
        return FarmOutcome(True, res.data, res.version, res.retries + 1)


def farm_race(schedule: tuple, old_payload: bytes, new_payload: bytes, v_old: int,
              max_retries: int = 16) -> FarmOutcome:
    racer = FarmRacer(old_payload, new_payload, v_old, max_retries)
    for step in schedule:
        racer.step(step)
    return racer.finish()


@dataclass(frozen=True)
class OaeOutcome:
    torn: bool
    state: str
    reason: Optional[str]
    committed_torn: bool


def oae_entry(version: int, payload_len: int = 304) -> bytes:
    if payload_len >= 304:
        return DhtEntry.make(version).pack().ljust(payload_len, b"\0")[:payload_len]
    return bytes([(version * 29 + i) & 0xFF for i in range(payload_len)])


class OaeRacer:
    """An OAE transfer delivers ``v_sent``; once it is visible, a plain writer
    overwrites it line by line with ``v_racer`` while the receiver assembles
    the object for reflection."""

    def __init__(self, sim: Simulator, v_sent: int, v_racer: int, payload_len: int = 304,
                 invariant_id: str = "dht-entry", skip_reflect: bool = False,
                 config: Optional[OaeConfig] = None, nic_config=None, plan=None):
        self.sim = sim
        self.sent = encode_versioned(oae_entry(v_sent, payload_len), v_sent)
        self.racer = encode_versioned(oae_entry(v_racer, payload_len), v_racer)
        self.n_lines = versioned_line_count(payload_len)
        self.mem = RemoteMemory(self.n_lines * LINE)
        self.mem.register(0, self.mem.size)
        self.nic = Nic(sim, self.mem, plan, nic_config)
        self.qp = self.nic.create_qp(Transport.RC, mtu_bytes=4096)
        cfg = config or OaeConfig(invariant_id=invariant_id, skip_reflect=skip_reflect)
        self.ep = OaeEndpoint(self.nic, self.qp, cfg, auto=False)
        self.handle = None
        self.assembled = bytearray(len(self.sent))
        self.written: set = set()
        self.seen = self.seen_new = 0
        self.buf = None

    def start(self):
        self.handle = self.ep.oae_initiate(self.sent, invariant(self.ep.config.invariant_id),
                                           self.ep.config.expected_schema)
        return self.handle

    def step(self, step) -> str:
        if self.buf is None:
            self.buf = bytearray(self.mem.visible)
        lo, hi = step.line_index * LINE, (step.line_index + 1) * LINE
        if step.actor == Actor.WRITER:
            self.buf[lo:hi] = self.racer[lo:hi]
            self.written.add(step.line_index)
            return f"racer writes line {step.line_index}"
        self.assembled[lo:hi] = self.buf[lo:hi]
        self.seen += 1
        self.seen_new += step.line_index in self.written
        return f"receiver assembles line {step.line_index}"

    @property
    def torn(self) -> bool:
        return 0 < self.seen_new < self.seen

    def finish(self) -> OaeOutcome:
        h = self.handle
        if self.ep.config.skip_reflect:
            # already committed at the completion; the application reads whatever is there
            return OaeOutcome(self.torn, h.link.state.value, None, self.torn)
        state = self.ep.integrate_now(h, bytes(self.assembled))
        reason = h.link.reason.value if h.link.reason else None
        return OaeOutcome(self.torn, state.value, reason,
                          state == LinkState.COMMITTED and self.torn)


def oae_race(schedule: tuple, v_sent: int, v_racer: int, payload_len: int = 304,
             invariant_id: str = "dht-entry", skip_reflect: bool = False) -> OaeOutcome:
    sim = Simulator()
    racer = OaeRacer(sim, v_sent, v_racer, payload_len, invariant_id, skip_reflect)
    racer.start()
    sim.run()
    for step in schedule:
        racer.step(step)
    return racer.finish()
