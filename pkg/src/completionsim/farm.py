"""Versioned cache-line objects with optimistic two-pass reads.

Each 64-byte line carries 56 data bytes and, in its last 8 bytes, the
version of the write that produced it. Writers update lines with plain
writes and then commit with an 8-byte compare-and-swap on a separate
version word. Readers read every line, re-read every version, and retry
unless all observed versions agree.

The retry decision uses only versions the reader itself observed; no
acknowledgment from the writer or receiver is consulted.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Generator, Optional

from .engine import RemoteMemory
from .errors import CasConflict, TornReadUnresolved
from .layout import LINE, LINE_DATA, decode_line, encode_line, split_versioned

DEFAULT_MAX_RETRIES = 16


@dataclass(frozen=True)
class VersionedLine:
    data: bytes
    version: int

    @property
    def raw(self) -> bytes:
        return encode_line(self.data, self.version)


class VersionedObject:
    """``n_lines`` versioned lines at ``base`` plus an 8-byte commit word."""

    def __init__(self, memory: RemoteMemory, base: int, n_lines: int, commit_offset: int,
                 payload_len: Optional[int] = None):
        if memory.line_size != LINE:
            raise ValueError("versioned objects need 64-byte lines")
        self.memory = memory
        self.base = base
        self.n_lines = n_lines
        self.commit_offset = commit_offset
        self.payload_len = n_lines * LINE_DATA if payload_len is None else payload_len

    @classmethod
    def allocate(cls, payload: bytes, version: int) -> "VersionedObject":
        """Fresh memory holding ``payload`` committed at ``version``."""
        n = len(split_versioned(payload))
        mem = RemoteMemory((n + 1) * LINE)
        mem.register(0, mem.size)
        obj = cls(mem, 0, n, n * LINE, len(payload))
        for i, d in enumerate(split_versioned(payload)):
            obj.write_line(i, d, version)
        obj._store_word(version)
        return obj

    # memory access, one whole cache line at a time
    def write_line(self, i: int, data: bytes, version: int) -> None:
        off = self.base + i * LINE
        self.memory.place(off, encode_line(data, version))
        self.memory.promote([off // LINE], at=0)

    def read_line(self, i: int) -> VersionedLine:
        d, v = decode_line(self.memory.cpu_read(self.base + i * LINE, LINE))
        return VersionedLine(d, v)

    def read_version(self, i: int) -> int:
        return self.read_line(i).version

    def _store_word(self, value: int) -> None:
        self.memory.place(self.commit_offset, struct.pack("<Q", value))
        self.memory.promote(self.memory.lines_touched(self.commit_offset, 8), at=0)

    @property
    def committed_version(self) -> int:
        return struct.unpack("<Q", self.memory.nic_read(self.commit_offset, 8))[0]

    def cas_commit(self, expect: int, new: int) -> int:
        """8-byte compare-and-swap on the commit word; returns the prior value."""
        prior = self.committed_version
        if prior == expect:
            self._store_word(new)
        return prior

    @property
    def lines(self) -> list[VersionedLine]:
        return [self.read_line(i) for i in range(self.n_lines)]

    def payload(self) -> bytes:
        return b"".join(l.data for l in self.lines)[:self.payload_len]


@dataclass(frozen=True)
class FarmWriteOutcome:
    version: int
    cas_prior: int
    committed: bool


@dataclass(frozen=True)
class ReadAttempt:
    consistent: bool
    data: bytes
    version: Optional[int]
    observations: tuple


@dataclass(frozen=True)
class FarmReadResult:
    data: bytes
    version: int
    retries: int


def farm_write_steps(obj: VersionedObject, new_data: bytes, new_version: int,
                     expect: Optional[int] = None) -> Generator[int, None, FarmWriteOutcome]:
    """Write lines one at a time, yielding each line index; then commit.

    ``expect`` is the committed version this writer read before starting
    (defaults to the current one).
    """
    base = obj.committed_version if expect is None else expect
    if new_version != base + 1:
        raise ValueError(f"new version {new_version} must be committed version {base} + 1")
    chunks = split_versioned(new_data)
    if len(chunks) > obj.n_lines:
        raise ValueError(f"{len(new_data)} bytes do not fit {obj.n_lines} versioned lines")
    chunks += [bytes(LINE_DATA)] * (obj.n_lines - len(chunks))
    for i, d in enumerate(chunks):
        obj.write_line(i, d, new_version)
        yield i
    prior = obj.cas_commit(base, new_version)
    if prior != base:
        raise CasConflict(f"commit word is {prior}, expected {base}")
    return FarmWriteOutcome(new_version, prior, True)


def farm_write(obj: VersionedObject, new_data: bytes, new_version: int) -> FarmWriteOutcome:
    return run_to_end(farm_write_steps(obj, new_data, new_version))


def run_to_end(gen: Generator):
    try:
        while True:
            next(gen)
    except StopIteration as stop:
        return stop.value


def farm_read_attempt(obj: VersionedObject) -> Generator[tuple, None, ReadAttempt]:
    """One optimistic attempt: pass 1 reads lines, pass 2 re-reads versions."""
    first = []
    for i in range(obj.n_lines):
        first.append(obj.read_line(i))
        yield ("lines", i)
    second = []
    for i in range(obj.n_lines):
        second.append(obj.read_version(i))
        yield ("versions", i)
    observed = tuple(l.version for l in first) + tuple(second)
    consistent = len(set(observed)) == 1
    data = b"".join(l.data for l in first)[:obj.payload_len]
    return ReadAttempt(consistent, data, observed[0] if consistent else None, observed)


def farm_read(obj: VersionedObject, max_retries: int = DEFAULT_MAX_RETRIES,
              on_step: Optional[Callable[[int, tuple], None]] = None) -> FarmReadResult:
    """Retry until one attempt sees a single version everywhere.

    ``on_step(attempt, step)`` runs after every reader step and lets a
    caller interleave concurrent writers.
    """
    if max_retries < 0:
        raise ValueError("max_retries must be >= 0")
    for attempt in range(max_retries + 1):
        gen = farm_read_attempt(obj)
        try:
            while True:
                step = next(gen)
                if on_step is not None:
                    on_step(attempt, step)
        except StopIteration as stop:
            result: ReadAttempt = stop.value
        if result.consistent:
            return FarmReadResult(result.data, result.version, attempt)
    raise TornReadUnresolved(max_retries + 1)
