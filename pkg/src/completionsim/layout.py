"""Byte layouts for the distributed hash table entry used in torn-write
experiments, in raw and per-line-versioned form."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

LINE = 64
VERSION_BYTES = 8
LINE_DATA = LINE - VERSION_BYTES  # 56

ENTRY_BYTES = 304  # version 8 + key 32 + value 256 + status 8


class EntryStatus(IntEnum):
    VALID = 1
    DELETED = 2
    LOCKED = 3


@dataclass(frozen=True)
class DhtEntry:
    version: int
    key: bytes
    value: bytes
    status: int

    def pack(self) -> bytes:
        if len(self.key) != 32 or len(self.value) != 256:
            raise ValueError("key must be 32 bytes and value 256 bytes")
        return (struct.pack("<Q", self.version) + self.key + self.value
                + struct.pack("<Q", self.status))

    @classmethod
    def unpack(cls, raw: bytes) -> "DhtEntry":
        if len(raw) < ENTRY_BYTES:
            raise ValueError(f"need {ENTRY_BYTES} bytes, got {len(raw)}")
        (version,) = struct.unpack_from("<Q", raw, 0)
        (status,) = struct.unpack_from("<Q", raw, 296)
        return cls(version, bytes(raw[8:40]), bytes(raw[40:296]), status)

    @classmethod
    def make(cls, version: int, fill: int = None, status: int = EntryStatus.VALID) -> "DhtEntry":
        """Entry whose key and value bytes are derived from ``version``."""
        b = (version * 37 + 11) & 0xFF if fill is None else fill
        key = bytes((b + i) & 0xFF for i in range(32))
        value = bytes((b * 3 + i) & 0xFF for i in range(256))
        return cls(version, key, value, int(status))


def raw_line_count(size_bytes: int, line: int = LINE) -> int:
    return -(-size_bytes // line)


def versioned_line_count(size_bytes: int) -> int:
    return -(-size_bytes // LINE_DATA)


def split_versioned(payload: bytes) -> list[bytes]:
    """Cut ``payload`` into zero-padded 56-byte line data areas."""
    n = versioned_line_count(len(payload))
    padded = payload.ljust(n * LINE_DATA, b"\0")
    return [padded[i * LINE_DATA:(i + 1) * LINE_DATA] for i in range(n)]


def encode_line(data: bytes, version: int) -> bytes:
    if len(data) != LINE_DATA:
        raise ValueError(f"line data must be {LINE_DATA} bytes")
    return data + struct.pack("<Q", version)


def decode_line(raw: bytes) -> tuple[bytes, int]:
    return bytes(raw[:LINE_DATA]), struct.unpack_from("<Q", raw, LINE_DATA)[0]


def encode_versioned(payload: bytes, version: int) -> bytes:
    return b"".join(encode_line(d, version) for d in split_versioned(payload))


def decode_versioned(raw: bytes, payload_len: int) -> tuple[bytes, list[int]]:
    """Reassemble payload bytes and per-line versions from versioned lines."""
    n = len(raw) // LINE
    data, versions = [], []
    for i in range(n):
        d, v = decode_line(raw[i * LINE:(i + 1) * LINE])
        data.append(d)
        versions.append(v)
    return b"".join(data)[:payload_len], versions


def dht_entry_pair(size_bytes: int = ENTRY_BYTES, v_old: int = 1, v_new: int = 2) -> tuple[bytes, bytes]:
    """Two versions of an entry, zero-padded or cut to ``size_bytes``."""
    def fit(v):
        return DhtEntry.make(v).pack().ljust(size_bytes, b"\0")[:size_bytes]
    return fit(v_old), fit(v_new)
