"""Chunk-granular receipt bitmaps, partial completion reports and selective
retransmission."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NothingMissing, OutOfRange


class ChunkBitmap:
    """Bit ``i`` is set iff chunk ``i`` has been placed at the receiver."""

    def __init__(self, chunk_count: int):
        if chunk_count < 0:
            raise ValueError("chunk_count must be non-negative")
        self.chunk_count = chunk_count
        self.bits = np.zeros(chunk_count, dtype=bool)

    def set(self, chunk_index: int) -> None:
        if not 0 <= chunk_index < self.chunk_count:
            raise OutOfRange(f"chunk {chunk_index} outside 0..{self.chunk_count - 1}")
        self.bits[chunk_index] = True

    def __getitem__(self, i: int) -> bool:
        return bool(self.bits[i])

    @property
    def delivered_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def missing(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(~self.bits)]

    def complete(self) -> bool:
        return self.chunk_count > 0 and bool(self.bits.all())

    def copy(self) -> "ChunkBitmap":
        out = ChunkBitmap(self.chunk_count)
        out.bits = self.bits.copy()
        return out

    def rle(self) -> str:
        """Run-length encoding, e.g. ``1x511,0x1,1x512``."""
        if self.chunk_count == 0:
            return ""
        b = self.bits.astype(np.int8)
        edges = np.flatnonzero(np.diff(b)) + 1
        starts = np.concatenate(([0], edges))
        ends = np.concatenate((edges, [self.chunk_count]))
        return ",".join(f"{int(b[s])}x{int(e - s)}" for s, e in zip(starts, ends))

    @classmethod
    def from_rle(cls, text: str) -> "ChunkBitmap":
        runs = [tuple(int(x) for x in part.split("x")) for part in text.split(",") if part]
        bm = cls(sum(n for _, n in runs))
        pos = 0
        for bit, n in runs:
            bm.bits[pos:pos + n] = bool(bit)
            pos += n
        return bm

    def __eq__(self, other) -> bool:
        return (isinstance(other, ChunkBitmap) and self.chunk_count == other.chunk_count
                and bool(np.array_equal(self.bits, other.bits)))


@dataclass(frozen=True)
class PartialCompletion:
    op_id: int
    bitmap: ChunkBitmap
    delivered_count: int
    delivered_fraction: Fraction

    @property
    def percent(self) -> str:
        """Delivered fraction as a percentage, six significant figures."""
        return f"{float(self.delivered_fraction) * 100:.6g}%"


@dataclass(frozen=True)
class RetransmitPlan:
    op_id: int
    chunks: tuple
    whole_message: bool

    def __len__(self) -> int:
        return len(self.chunks)


def on_chunk_received(bitmap: ChunkBitmap, chunk_index: int) -> None:
    bitmap.set(chunk_index)


def report(op_id: int, bitmap: ChunkBitmap) -> PartialCompletion:
    n = bitmap.chunk_count
    delivered = bitmap.delivered_count
    frac = Fraction(delivered, n) if n else Fraction(0)
    return PartialCompletion(op_id, bitmap.copy(), delivered, frac)


def selective_retransmit(op_id: int, bitmap: ChunkBitmap) -> RetransmitPlan:
    missing = bitmap.missing()
    if not missing:
        raise NothingMissing(f"op {op_id}: every chunk already delivered")
    return RetransmitPlan(op_id, tuple(missing), whole_message=False)


def whole_message_plan(op_id: int, chunk_count: int) -> RetransmitPlan:
    return RetransmitPlan(op_id, tuple(range(chunk_count)), whole_message=True)
