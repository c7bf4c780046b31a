"""Four-state link protocol with a mandatory reflecting phase.

A transfer only commits after the receiver has assembled the data from its
own visible memory, checked it, and sent a digest of what it holds back to
the sender. The sender commits iff that digest matches what it sent.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .engine import EventKind, Stage
from .errors import LinkBusy, NotYetVisible, WrongState
from .faults import TAG_REFLECT, decide_loss
from .layout import LINE, EntryStatus, DhtEntry, decode_versioned
from .verbs import CompletionRecord, Nic, QueuePair, Status, Transfer


class LinkState(str, Enum):
    IDLE = "Idle"
    TENTATIVE = "Tentative"
    REFLECTING = "Reflecting"
    COMMITTED = "Committed"
    REJECTED = "Rejected"


class RejectReason(str, Enum):
    SDC_DETECTED = "SdcDetected"
    INVARIANT_VIOLATION = "InvariantViolation"
    SCHEMA_MISMATCH = "SchemaMismatch"
    REFLECT_TIMEOUT = "ReflectTimeout"


LEGAL_TRANSITIONS = {
    LinkState.IDLE: frozenset({LinkState.TENTATIVE}),
    LinkState.TENTATIVE: frozenset({LinkState.REFLECTING}),
    LinkState.REFLECTING: frozenset({LinkState.COMMITTED, LinkState.REJECTED}),
    LinkState.COMMITTED: frozenset(),
    LinkState.REJECTED: frozenset(),
}

# test fixture only: lets a transfer commit straight from Tentative
SKIP_REFLECT_TRANSITIONS = {
    **LEGAL_TRANSITIONS,
    LinkState.TENTATIVE: frozenset({LinkState.REFLECTING, LinkState.COMMITTED}),
}


class Link:
    def __init__(self, transitions=None):
        self.transitions = transitions or LEGAL_TRANSITIONS
        self.state = LinkState.IDLE
        self.reason: Optional[RejectReason] = None
        self.history: list[LinkState] = [LinkState.IDLE]

    def can(self, target: LinkState) -> bool:
        return target in self.transitions[self.state]

    def transition(self, target: LinkState, reason: Optional[RejectReason] = None) -> None:
        target = LinkState(target)
        if not self.can(target):
            raise WrongState(f"{self.state.value} -> {target.value} is not a legal transition")
        self.state = target
        if target == LinkState.REJECTED:
            self.reason = reason
        self.history.append(target)


def commit_guard(attempts: Iterable[LinkState], link: Optional[Link] = None) -> list[bool]:
    """Apply each attempted transition in turn; illegal ones leave the state unchanged."""
    link = link or Link()
    verdicts = []
    for target in attempts:
        try:
            link.transition(target)
            verdicts.append(True)
        except WrongState:
            verdicts.append(False)
    return verdicts


# -- digests and invariants ------------------------------------------------

def checksum(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


@dataclass(frozen=True)
class SemanticDigest:
    payload_checksum: int
    invariant_verdict: bool
    invariant_id: str
    schema_version: int


@dataclass(frozen=True)
class InvariantSpec:
    invariant_id: str
    description: str
    # (assembled bytes, receiver's last committed version) -> verdict
    predicate: Callable[[bytes, int], bool] = field(compare=False)

    def check(self, assembled: bytes, last_version: int = 0) -> bool:
        try:
            return bool(self.predicate(assembled, last_version))
        except (ValueError, IndexError):
            return False


def _line_versions(raw: bytes) -> list[int]:
    return decode_versioned(raw, len(raw))[1]


def _all_versions_equal(raw: bytes, _last: int) -> bool:
    v = _line_versions(raw)
    return len(v) > 0 and len(set(v)) == 1


def _entry(raw: bytes) -> DhtEntry:
    payload, _ = decode_versioned(raw, len(raw) // LINE * 56)
    return DhtEntry.unpack(payload)


def _status_in_set(raw: bytes, _last: int) -> bool:
    return _entry(raw).status in {s.value for s in EntryStatus}


def _monotonic_version(raw: bytes, last: int) -> bool:
    e = _entry(raw)
    return e.version > last and all(v == e.version for v in _line_versions(raw))


INVARIANTS = {
    spec.invariant_id: spec
    for spec in [
        InvariantSpec("none", "no structural check", lambda raw, last: True),
        InvariantSpec("all-versions-equal", "every line carries the same version", _all_versions_equal),
        InvariantSpec("status-in-set", "status in {valid, deleted, locked}", _status_in_set),
        InvariantSpec("monotonic-version",
                      "entry version equals line versions and exceeds the last committed one",
                      _monotonic_version),
        InvariantSpec("dht-entry", "status in {valid, deleted, locked} and version fields all equal "
                      "and newer than the last committed entry",
                      lambda raw, last: (_all_versions_equal(raw, last) and _status_in_set(raw, last)
                                         and _monotonic_version(raw, last))),
    ]
}


VERSIONED_ENTRY_INVARIANTS = frozenset({"monotonic-version", "dht-entry"})


def invariant(invariant_id: str) -> InvariantSpec:
    try:
        return INVARIANTS[invariant_id]
    except KeyError:
        raise KeyError(f"unknown invariant {invariant_id!r}; known: {sorted(INVARIANTS)}") from None


# -- protocol over the verbs layer -----------------------------------------

@dataclass
class OaeConfig:
    invariant_id: str = "none"
    expected_schema: int = 1
    receiver_schema: int = 1
    reflect_loss_exempt: bool = True
    reflect_timeout_ticks: int = 50
    reflect_latency_ticks: int = 0
    skip_reflect: bool = False  # broken-guard fixture


@dataclass
class TransferHandle:
    op_id: int
    link: Link
    spec: InvariantSpec
    expected_checksum: int
    expected_schema: int
    transfer: Transfer
    state_at_completion: Optional[LinkState] = None
    verbs_status: Optional[Status] = None
    digest: Optional[SemanticDigest] = None
    delivered: Optional[bytes] = None  # exposed to the application only once committed
    committed_at: Optional[int] = None
    assembled: Optional[bytes] = None


class OaeEndpoint:
    """Sender and receiver halves of the protocol sharing one ``Nic``."""

    def __init__(self, nic: Nic, qp: QueuePair, config: Optional[OaeConfig] = None,
                 auto: bool = True):
        self.nic = nic
        self.sim = nic.sim
        self.qp = qp
        self.config = config or OaeConfig()
        self.link = self._fresh_link()
        self.handles: dict[int, TransferHandle] = {}
        self.receiver_last_version = 0
        self.auto = auto
        nic.on_completion.append(self._on_completion)
        nic.on_visible.append(self._on_visible)

    def _fresh_link(self) -> Link:
        return Link(SKIP_REFLECT_TRANSITIONS if self.config.skip_reflect else LEGAL_TRANSITIONS)

    def reset(self) -> None:
        """Start a new link session after the previous one terminated."""
        if self.link.state not in (LinkState.COMMITTED, LinkState.REJECTED, LinkState.IDLE):
            raise LinkBusy(f"link is {self.link.state.value}")
        self.link = self._fresh_link()

    # sender
    def oae_initiate(self, payload: bytes, spec: InvariantSpec, expected_schema: int,
                     remote_offset: int = 0) -> TransferHandle:
        if self.link.state != LinkState.IDLE:
            raise LinkBusy(f"link is {self.link.state.value}")
        self.link.transition(LinkState.TENTATIVE)
        op_id = self.nic.post_write(self.qp, payload, remote_offset)
        h = TransferHandle(op_id, self.link, spec, checksum(payload), expected_schema,
                           self.nic.transfers[op_id])
        self.handles[op_id] = h
        return h

    def _on_completion(self, tr: Transfer, rec: CompletionRecord) -> None:
        h = self.handles.get(tr.op_id)
        if h is None:
            return
        h.state_at_completion = h.link.state
        h.verbs_status = rec.status
        if self.config.skip_reflect and rec.status == Status.SUCCESS:
            # the completion fallacy: treat the CQE as commitment
            h.link.transition(LinkState.COMMITTED)
            h.committed_at = self.sim.clock
            h.delivered = self.nic.memory.nic_read(tr.wr.remote_offset, tr.length)

    def _on_visible(self, tr: Transfer) -> None:
        h = self.handles.get(tr.op_id)
        if h is None:
            return
        if self.config.skip_reflect and h.link.state == LinkState.COMMITTED:
            self.sim.record_stage(tr.op_id, Stage.SEMANTIC_AGREEMENT)
            return
        if not self.auto or h.link.state != LinkState.TENTATIVE:
            return
        self.sim.after(0, EventKind.INTEGRATE, tr.op_id, lambda: self._integrate_and_reflect(h))

    # receiver
    def receiver_integrate(self, h: TransferHandle, assembled: Optional[bytes] = None) -> SemanticDigest:
        tl = self.sim.timeline(h.op_id)
        if not tl.has(Stage.VISIBILITY):
            raise NotYetVisible(f"op {h.op_id} not yet visible at the receiver")
        if h.link.state != LinkState.TENTATIVE:
            raise WrongState(f"cannot integrate in state {h.link.state.value}")
        tr = h.transfer
        if assembled is None:
            assembled = self.nic.memory.cpu_read(tr.wr.remote_offset, tr.length)
        verdict = h.spec.check(assembled, self.receiver_last_version)
        digest = SemanticDigest(checksum(assembled), verdict, h.spec.invariant_id,
                                self.config.receiver_schema)
        h.link.transition(LinkState.REFLECTING)
        tl.integrated_at = self.sim.clock
        h.digest = digest
        h.assembled = assembled
        return digest

    def _integrate_and_reflect(self, h: TransferHandle, assembled: Optional[bytes] = None) -> str:
        digest = self.receiver_integrate(h, assembled)
        lost = (not self.config.reflect_loss_exempt
                and decide_loss(self.nic.plan, h.op_id, 0, TAG_REFLECT))
        if lost:
            self.sim.after(self.config.reflect_timeout_ticks, EventKind.REFLECT_TIMEOUT, h.op_id,
                           lambda: self._timeout(h))
            return "digest lost on return path"
        self.sim.after(self.config.reflect_latency_ticks, EventKind.REFLECT, h.op_id,
                       lambda: self.sender_resolve(h, digest).value)
        return f"crc={digest.payload_checksum:08x} verdict={digest.invariant_verdict}"

    def integrate_now(self, h: TransferHandle, assembled: Optional[bytes] = None) -> LinkState:
        """Synchronous integrate + resolve, for step-driven experiments."""
        digest = self.receiver_integrate(h, assembled)
        return self.sender_resolve(h, digest)

    def _timeout(self, h: TransferHandle) -> str:
        if h.link.state == LinkState.REFLECTING:
            h.link.transition(LinkState.REJECTED, RejectReason.REFLECT_TIMEOUT)
        return h.link.state.value

    # sender again
    def sender_resolve(self, h: TransferHandle, digest: SemanticDigest) -> LinkState:
        if h.link.state != LinkState.REFLECTING:
            raise WrongState(f"cannot resolve in state {h.link.state.value}")
        reason = None
        # the receiver's own checks outrank the byte comparison: only a
        # mismatch the receiver could not see for itself is silent corruption
        if digest.schema_version != h.expected_schema:
            reason = RejectReason.SCHEMA_MISMATCH
        elif not digest.invariant_verdict:
            reason = RejectReason.INVARIANT_VIOLATION
        elif digest.payload_checksum != h.expected_checksum:
            reason = RejectReason.SDC_DETECTED
        if reason is not None:
            h.link.transition(LinkState.REJECTED, reason)
            return LinkState.REJECTED
        h.link.transition(LinkState.COMMITTED)
        h.committed_at = self.sim.clock
        h.delivered = h.assembled
        self.sim.record_stage(h.op_id, Stage.SEMANTIC_AGREEMENT)
        if h.spec.invariant_id in VERSIONED_ENTRY_INVARIANTS:
            self.receiver_last_version = max(self.receiver_last_version, _entry(h.assembled).version)
        return LinkState.COMMITTED
