"""RDMA-style verbs over the event engine.

Writes are split into MTU-sized chunks, each subject to the fault plan. The
completion a sender sees is a single success/failure bit posted at T4, no
matter what happened to the bytes afterwards.
"""
from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import sdr
from .engine import EventKind, RemoteMemory, Simulator, Stage
from .errors import (
    MisalignedAtomic,
    NotEightBytes,
    ReceiverNotReady,
    UnregisteredRegion,
)
from .faults import FaultPlan, corrupt, lost_chunks, pause_class, visibility_delay, wire_jitter

ATOMIC_WIDTH = 8
MASK64 = (1 << 64) - 1


class Transport(str, Enum):
    RC = "RC"
    UC = "UC"
    CONNECTIONLESS = "connectionless"


class Verb(str, Enum):
    SEND = "send"
    RECV = "recv"
    WRITE = "write"
    READ = "read"
    ATOMIC_CAS = "cas"
    ATOMIC_FAA = "faa"


class Status(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class LossPolicy(str, Enum):
    WHOLE_MESSAGE = "whole-message"  # RC: resend everything
    DROP = "drop"                    # UC / connectionless: fail the op
    SELECTIVE = "selective"          # SDR: resend only missing chunks


@dataclass(frozen=True)
class CompletionRecord:
    op_id: int
    status: Status
    at: int


@dataclass
class QueuePair:
    id: int
    transport_mode: Transport = Transport.RC
    mtu_bytes: int = 4096
    priority_class: int = 0
    cq: deque = field(default_factory=deque)
    recv_queue: deque = field(default_factory=deque)
    recv_cq: deque = field(default_factory=deque)
    # RC/UC post completions strictly in submission order
    _order: deque = field(default_factory=deque)
    _ready: dict = field(default_factory=dict)

    @property
    def ordered(self) -> bool:
        return self.transport_mode != Transport.CONNECTIONLESS


@dataclass
class WorkRequest:
    op_id: int
    verb: Verb
    payload: bytes = b""
    remote_offset: int = 0
    atomic_operands: Optional[tuple] = None


@dataclass
class NicConfig:
    dma_ticks: int = 1
    wire_ticks: int = 2
    ack_ticks: int = 1
    timeout_ticks: int = 8
    max_passes: int = 64
    visibility_mode: str = "per-op"  # or "per-line"
    line_stride_ticks: int = 1
    # coherent fabrics promote visibility together with completion
    coherent: bool = False


@dataclass
class Transfer:
    """Sender-side bookkeeping for one posted operation."""

    wr: WorkRequest
    qp: QueuePair
    n_chunks: int
    policy: LossPolicy
    length: int
    context: Optional[str] = None
    attempt: int = 0
    bitmap: Optional[sdr.ChunkBitmap] = None
    chunks_sent: int = 0
    chunks_retransmitted: int = 0
    losses: list = field(default_factory=list)
    status: Optional[Status] = None
    result: Optional[int] = None
    read_data: Optional[bytes] = None
    corrupted: bool = False
    _placed_once: set = field(default_factory=set)

    @property
    def op_id(self) -> int:
        return self.wr.op_id


def chunk_count(length: int, mtu: int) -> int:
    if mtu <= 0:
        raise ValueError("mtu must be positive")
    return -(-length // mtu)


def transport_retransmit_policy(qp: QueuePair, op, lost: list) -> Optional[sdr.RetransmitPlan]:
    """What the transport resends after a lossy pass.

    Reliable connections resend the whole message on any loss; unreliable
    and connectionless modes resend nothing.
    """
    n = op.n_chunks if isinstance(op, Transfer) else int(op)
    op_id = op.op_id if isinstance(op, Transfer) else -1
    if not lost or qp.transport_mode != Transport.RC:
        return None
    return sdr.whole_message_plan(op_id, n)


class Nic:
    """Sender NIC, fabric and receiver NIC for one simulation instance."""

    def __init__(self, sim: Simulator, memory: RemoteMemory, plan: Optional[FaultPlan] = None,
                 config: Optional[NicConfig] = None):
        self.sim = sim
        self.memory = memory
        self.plan = plan or FaultPlan()
        self.config = config or NicConfig()
        self.qps: dict[int, QueuePair] = {}
        self.transfers: dict[int, Transfer] = {}
        self.on_completion: list[Callable[[Transfer, CompletionRecord], None]] = []
        self.on_visible: list[Callable[[Transfer], None]] = []
        self.on_pass: list[Callable[[Transfer, list], None]] = []
        self._qp_ids = 0

    # -- setup -----------------------------------------------------------
    def create_qp(self, transport_mode: Transport = Transport.RC, mtu_bytes: int = 4096,
                  priority_class: int = 0) -> QueuePair:
        self._qp_ids += 1
        qp = QueuePair(self._qp_ids, Transport(transport_mode), mtu_bytes, priority_class)
        self.qps[qp.id] = qp
        return qp

    # -- posting ---------------------------------------------------------
    def _submit(self, qp: QueuePair, wr_verb: Verb, payload: bytes, offset: int, length: int,
                policy: LossPolicy, operands=None, context=None) -> Transfer:
        op_id = self.sim.new_op()
        wr = WorkRequest(op_id, wr_verb, payload, offset, operands)
        n = max(1, chunk_count(length, qp.mtu_bytes))
        tr = Transfer(wr, qp, n, policy, length, context=context)
        if policy == LossPolicy.SELECTIVE:
            tr.bitmap = sdr.ChunkBitmap(n)
        self.transfers[op_id] = tr
        qp._order.append(op_id)
        self.sim.record_stage(op_id, Stage.SUBMISSION)
        self.sim.after(0, EventKind.SUBMIT, op_id, lambda: f"{wr_verb.value} qp={qp.id} len={length} chunks={n}")
        self.sim.after(self.config.dma_ticks, EventKind.PLACEMENT, op_id, lambda: self._placement(tr))
        return tr

    def _default_policy(self, qp: QueuePair) -> LossPolicy:
        return LossPolicy.WHOLE_MESSAGE if qp.transport_mode == Transport.RC else LossPolicy.DROP

    def post_write(self, qp: QueuePair, payload: bytes, remote_offset: int,
                   selective: bool = False, context: Optional[str] = None) -> int:
        if not payload:
            raise ValueError("payload must be non-empty")
        if not self.memory.is_registered(remote_offset, len(payload)):
            raise UnregisteredRegion(f"[{remote_offset}, {remote_offset + len(payload)}) not registered")
        policy = LossPolicy.SELECTIVE if selective else self._default_policy(qp)
        return self._submit(qp, Verb.WRITE, bytes(payload), remote_offset, len(payload),
                            policy, context=context).op_id

    def post_recv(self, qp: QueuePair, offset: int, length: int) -> None:
        if not self.memory.is_registered(offset, length):
            raise UnregisteredRegion(f"receive buffer [{offset}, {offset + length}) not registered")
        qp.recv_queue.append((offset, length))

    def post_send(self, qp: QueuePair, payload: bytes) -> int:
        if not qp.recv_queue:
            raise ReceiverNotReady(f"qp {qp.id}: no receive buffer posted")
        offset, length = qp.recv_queue[0]
        if len(payload) > length:
            raise ValueError(f"send of {len(payload)} bytes exceeds {length}-byte receive buffer")
        qp.recv_queue.popleft()
        return self._submit(qp, Verb.SEND, bytes(payload), offset, len(payload),
                            self._default_policy(qp)).op_id

    def post_read(self, qp: QueuePair, remote_offset: int, length: int) -> int:
        if not self.memory.is_registered(remote_offset, length):
            raise UnregisteredRegion(f"[{remote_offset}, {remote_offset + length}) not registered")
        return self._submit(qp, Verb.READ, b"", remote_offset, length, self._default_policy(qp)).op_id

    def post_atomic(self, qp: QueuePair, kind: Verb, remote_offset: int, operands: tuple) -> int:
        if kind not in (Verb.ATOMIC_CAS, Verb.ATOMIC_FAA):
            raise ValueError(f"{kind} is not an atomic verb")
        words = operands if isinstance(operands, tuple) else (operands,)
        expected = 2 if kind == Verb.ATOMIC_CAS else 1
        if len(words) != expected:
            raise ValueError(f"{kind.value} takes {expected} operand(s)")
        for w in words:
            if isinstance(w, (bytes, bytearray)):
                if len(w) != ATOMIC_WIDTH:
                    raise NotEightBytes(f"atomic operand is {len(w)} bytes")
            elif not 0 <= int(w) <= MASK64:
                raise NotEightBytes(f"atomic operand {w} does not fit 8 bytes")
        if remote_offset % ATOMIC_WIDTH:
            raise MisalignedAtomic(f"offset {remote_offset} not 8-byte aligned")
        if not self.memory.is_registered(remote_offset, ATOMIC_WIDTH):
            raise UnregisteredRegion(f"atomic target {remote_offset} not registered")
        ints = tuple(int.from_bytes(w, "little") if isinstance(w, (bytes, bytearray)) else int(w)
                     for w in words)
        return self._submit(qp, kind, b"", remote_offset, ATOMIC_WIDTH, self._default_policy(qp),
                            operands=ints).op_id

    # -- pipeline --------------------------------------------------------
    def _placement(self, tr: Transfer) -> str:
        self.sim.record_stage(tr.op_id, Stage.PLACEMENT)
        self.sim.after(0, EventKind.TRANSMISSION, tr.op_id, lambda: self._transmit(tr, None))
        return "staged in NIC"

    def _transmit(self, tr: Transfer, indices: Optional[list]) -> str:
        tl = self.sim.timeline(tr.op_id)
        if not tl.has(Stage.TRANSMISSION):
            self.sim.record_stage(tr.op_id, Stage.TRANSMISSION)
        count = tr.n_chunks if indices is None else len(indices)
        tr.chunks_sent += count
        delay = self.config.wire_ticks + wire_jitter(self.plan, tr.op_id)
        self.sim.after(delay, EventKind.REMOTE_PLACEMENT, tr.op_id, lambda: self._arrive(tr, indices))
        return f"pass={tr.attempt} chunks={count}"

    def _chunk_bytes(self, tr: Transfer, i: int) -> tuple[int, bytes]:
        mtu = tr.qp.mtu_bytes
        off = tr.wr.remote_offset + i * mtu
        return off, tr.wr.payload[i * mtu:(i + 1) * mtu]

    def _arrive(self, tr: Transfer, indices: Optional[list]) -> str:
        lost = lost_chunks(self.plan, tr.op_id, tr.n_chunks, tr.attempt, indices)
        tr.losses.append(lost)
        lost_set = set(lost)
        verb = tr.wr.verb
        sent = range(tr.n_chunks) if indices is None else indices
        if verb in (Verb.WRITE, Verb.SEND):
            flips = {}
            for f in self.plan.flips_for(tr.op_id):
                flips.setdefault(f.chunk_index, []).append(f.bit_index)
            for i in sent:
                if i in lost_set:
                    continue
                off, data = self._chunk_bytes(tr, i)
                if i in flips and i not in tr._placed_once:
                    for bit in flips[i]:
                        data = corrupt(data, bit)
                    tr.corrupted = True
                tr._placed_once.add(i)
                self.memory.place(off, data)
                if tr.bitmap is not None:
                    sdr.on_chunk_received(tr.bitmap, i)
        elif not lost:
            self._execute_remote(tr)
        for cb in self.on_pass:
            cb(tr, lost)
        detail = f"pass={tr.attempt} lost={len(lost)}"
        if tr.bitmap is not None:
            detail += f" bitmap={tr.bitmap.rle()}"
        self._after_pass(tr, lost)
        return detail

    def _execute_remote(self, tr: Transfer) -> None:
        off = tr.wr.remote_offset
        if tr.wr.verb == Verb.READ:
            tr.read_data = self.memory.nic_read(off, tr.length)
            return
        # atomics run at the remote NIC against placed bytes
        (prior,) = struct.unpack("<Q", self.memory.nic_read(off, ATOMIC_WIDTH))
        tr.result = prior
        if tr.wr.verb == Verb.ATOMIC_CAS:
            expect, swap = tr.wr.atomic_operands
            if prior == expect:
                self.memory.place(off, struct.pack("<Q", swap))
        else:
            (addend,) = tr.wr.atomic_operands
            self.memory.place(off, struct.pack("<Q", (prior + addend) & MASK64))

    def _after_pass(self, tr: Transfer, lost: list) -> None:
        cfg = self.config
        if tr.policy == LossPolicy.SELECTIVE:
            done = tr.bitmap.complete()
        else:
            done = not lost
        if done:
            self.sim.record_stage(tr.op_id, Stage.REMOTE_PLACEMENT)
            self._complete_after(tr, Status.SUCCESS, cfg.ack_ticks)
            return
        if tr.policy == LossPolicy.DROP:
            self._complete_after(tr, Status.FAILURE, cfg.ack_ticks)
            return
        if tr.attempt + 1 >= cfg.max_passes:
            self._complete_after(tr, Status.FAILURE, cfg.timeout_ticks)
            return
        if tr.policy == LossPolicy.WHOLE_MESSAGE:
            plan = transport_retransmit_policy(tr.qp, tr, lost)
            indices = None
        else:
            plan = sdr.selective_retransmit(tr.op_id, tr.bitmap)
            indices = list(plan.chunks)
        tr.attempt += 1
        tr.chunks_retransmitted += len(plan)
        self.sim.after(cfg.timeout_ticks, EventKind.RETRANSMIT, tr.op_id,
                       lambda: self._transmit(tr, indices))

    def _complete_after(self, tr: Transfer, status: Status, delay: int) -> None:
        due = self.sim.clock + delay
        due += pause_class(self.plan, tr.qp.priority_class, due)
        tr.status = status
        self.sim.at(due, EventKind.COMPLETION, tr.op_id, lambda: self._ready(tr))

    def _ready(self, tr: Transfer) -> str:
        qp = tr.qp
        if not qp.ordered:
            self._post_cqe(tr)
            return f"{tr.status.value}"
        qp._ready[tr.op_id] = tr
        posted = []
        while qp._order and qp._order[0] in qp._ready:
            nxt = qp._ready.pop(qp._order.popleft())
            self._post_cqe(nxt)
            posted.append(nxt.op_id)
        if tr.op_id not in posted:
            return f"{tr.status.value} held behind op {qp._order[0]}"
        return ",".join(f"{self.transfers[o].status.value}@{o}" for o in posted)

    def _post_cqe(self, tr: Transfer) -> None:
        now = self.sim.clock
        self.sim.record_stage(tr.op_id, Stage.COMPLETION)
        rec = CompletionRecord(tr.op_id, tr.status, now)
        tr.qp.cq.append(rec)
        if tr.wr.verb == Verb.SEND and tr.status == Status.SUCCESS:
            tr.qp.recv_cq.append(CompletionRecord(tr.op_id, Status.SUCCESS, now))
        for cb in self.on_completion:
            cb(tr, rec)
        if tr.status == Status.SUCCESS and tr.wr.verb in (Verb.WRITE, Verb.SEND, Verb.ATOMIC_CAS, Verb.ATOMIC_FAA):
            self._schedule_visibility(tr)

    def _schedule_visibility(self, tr: Transfer) -> None:
        delay = 0 if self.config.coherent else visibility_delay(self.plan, tr.op_id)
        lines = list(self.memory.lines_touched(tr.wr.remote_offset, tr.length))
        if self.config.visibility_mode == "per-line" and not self.config.coherent:
            stride = self.config.line_stride_ticks
            for k, line in enumerate(lines):
                last = k == len(lines) - 1
                self.sim.after(delay + k * stride, EventKind.LINE_VISIBLE, tr.op_id,
                               lambda line=line, last=last: self._promote(tr, [line], last))
        else:
            self.sim.after(delay, EventKind.VISIBILITY, tr.op_id, lambda: self._promote(tr, lines, True))

    def promote_now(self, tr: Transfer) -> None:
        """Promote an op's lines immediately (fences, signals)."""
        if not self.sim.timeline(tr.op_id).has(Stage.VISIBILITY):
            self._promote(tr, list(self.memory.lines_touched(tr.wr.remote_offset, tr.length)), True)

    def _promote(self, tr: Transfer, lines: list, last: bool) -> str:
        tl = self.sim.timeline(tr.op_id)
        if tl.has(Stage.VISIBILITY):
            return "already visible"
        self.memory.promote(lines, self.sim.clock)
        if last:
            self.sim.record_stage(tr.op_id, Stage.VISIBILITY)
            for cb in self.on_visible:
                cb(tr)
        return f"lines {lines[0]}..{lines[-1]}" if lines else ""

    # -- completion queue ------------------------------------------------
    def poll_cq(self, qp: QueuePair) -> list[CompletionRecord]:
        out = []
        while qp.cq and qp.cq[0].at <= self.sim.clock:
            out.append(qp.cq.popleft())
        return out

    def poll_recv_cq(self, qp: QueuePair) -> list[CompletionRecord]:
        out = list(qp.recv_cq)
        qp.recv_cq.clear()
        return out

    # -- ground truth ----------------------------------------------------
    def delivered_intact(self, tr: Transfer) -> bool:
        """Whether the remote CPU now sees exactly the bytes the sender wrote."""
        return self.memory.cpu_read(tr.wr.remote_offset, tr.length) == tr.wr.payload
