"""Interconnect profiles and the temporal gap matrix.

The built-in profiles encode, per technology, whether the completion signal
implies visibility, whether anything establishes semantic agreement, the
atomicity boundary, whether a reflecting phase exists and how corruption is
detected. :func:`simulate_gap_matrix` recomputes the same matrix from
simulated runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .engine import RemoteMemory, Simulator
from .errors import ScenarioSuiteIncomplete
from .faults import DelaySpec, FaultPlan, SdcFlip
from .hashing import stream_key, uniform_int
from .oae import LinkState, OaeConfig, OaeEndpoint, RejectReason, invariant
from .torn import oae_race, plain_race_fast, schedules
from .verbs import Nic, NicConfig, Status, Transport


class Verdict(str, Enum):
    CLOSED = "closed"
    OPEN = "open"
    UNKNOWN = "unknown"


class ReflectingPhase(str, Enum):
    ABSENT = "absent"
    MANDATORY = "mandatory"


class SdcDetection(str, Enum):
    NONE = "none"
    REFLECTION_MISMATCH = "reflection mismatch"


class OrderingQuirk(str, Enum):
    UIO_FABRIC_DELIVERY = "uio-fabric-delivery"
    SIGNAL_CONTEXT_VISIBILITY = "signal-context-visibility"
    SINGLE_FLIT_ONLY = "single-flit-only"


@dataclass(frozen=True)
class AtomicityBoundary:
    """Byte range ``lo..hi``; both None means a whole transaction."""

    lo: Optional[int] = None
    hi: Optional[int] = None

    @property
    def is_transaction(self) -> bool:
        return self.lo is None

    def __str__(self) -> str:
        if self.is_transaction:
            return "transaction"
        return f"{self.lo} B" if self.lo == self.hi else f"{self.lo}-{self.hi} B"


TRANSACTION = AtomicityBoundary()

ROWS = (
    "T4->T5 (visibility)",
    "T5->T6 (semantics)",
    "Atomicity boundary",
    "Reflecting phase",
    "SDC detection",
)


@dataclass(frozen=True)
class InterconnectProfile:
    name: str
    atomicity_boundary: AtomicityBoundary
    closes_visibility_gap: Verdict
    closes_semantic_gap: Verdict
    reflecting: ReflectingPhase
    sdc_detection: SdcDetection
    ordering_quirk: Optional[OrderingQuirk] = None
    # atomic unit sizes the simulation configures for this fabric
    unit_sizes: tuple = ()

    def cells(self) -> dict:
        return dict(zip(ROWS, (
            self.closes_visibility_gap.value,
            self.closes_semantic_gap.value,
            str(self.atomicity_boundary),
            self.reflecting.value,
            self.sdc_detection.value,
        )))


def builtin_profiles() -> list[InterconnectProfile]:
    return [
        InterconnectProfile("RDMA", AtomicityBoundary(8, 8), Verdict.OPEN, Verdict.OPEN,
                            ReflectingPhase.ABSENT, SdcDetection.NONE, None, (8,)),
        InterconnectProfile("CXL", AtomicityBoundary(64, 128), Verdict.CLOSED, Verdict.OPEN,
                            ReflectingPhase.ABSENT, SdcDetection.NONE,
                            OrderingQuirk.UIO_FABRIC_DELIVERY, (64, 128)),
        InterconnectProfile("NVLink", AtomicityBoundary(128, 128), Verdict.CLOSED, Verdict.OPEN,
                            ReflectingPhase.ABSENT, SdcDetection.NONE,
                            OrderingQuirk.SIGNAL_CONTEXT_VISIBILITY, (128,)),
        InterconnectProfile("UALink", AtomicityBoundary(640, 640), Verdict.UNKNOWN, Verdict.OPEN,
                            ReflectingPhase.ABSENT, SdcDetection.NONE,
                            OrderingQuirk.SINGLE_FLIT_ONLY, (640,)),
        InterconnectProfile("OAE", TRANSACTION, Verdict.CLOSED, Verdict.CLOSED,
                            ReflectingPhase.MANDATORY, SdcDetection.REFLECTION_MISMATCH, None, ()),
    ]


def profile(name: str) -> InterconnectProfile:
    for p in builtin_profiles():
        if p.name.lower() == name.lower():
            return p
    raise KeyError(f"unknown profile {name!r}")


def torn_exposure(p: InterconnectProfile, object_size_bytes: int) -> bool:
    """Can a reader observe a mix of two versions of an object this big?

    Ranges use their lower bound.
    """
    if object_size_bytes < 1:
        raise ValueError("object size must be >= 1")
    if p.atomicity_boundary.is_transaction:
        return False
    return object_size_bytes > p.atomicity_boundary.lo


# -- simulation -------------------------------------------------------------

RUN_KINDS = ("visibility", "torn", "sdc")
SIZE_LADDER = (8, 9, 64, 65, 128, 129, 304, 640, 641)


@dataclass(frozen=True)
class ScenarioRun:
    profile: str
    kind: str
    seed: int = 0
    visibility_delay: int = 10
    trials: int = 16
    sizes: tuple = SIZE_LADDER
    schedule_limit: int = 200


def default_suite(seed: int = 0, visibility_delay: int = 10, sdc_trials: int = 16) -> list[ScenarioRun]:
    return [ScenarioRun(p.name, kind, seed, visibility_delay, sdc_trials)
            for p in builtin_profiles() for kind in RUN_KINDS]


@dataclass
class RunResult:
    profile: str
    kind: str
    app_successes: int = 0
    intact_successes: int = 0
    visible_at_completion: Optional[bool] = None
    reflected: list = field(default_factory=list)
    sdc_injected: int = 0
    sdc_detected: int = 0
    boundary: Optional[AtomicityBoundary] = None
    assumption: Optional[str] = None
    notes: list = field(default_factory=list)


@dataclass
class GapMatrix:
    cells: dict
    runs: list
    notes: list

    def diff(self, expected: Optional[list] = None) -> list[tuple[str, str]]:
        expected = expected or builtin_profiles()
        out = []
        for p in expected:
            got = self.cells.get(p.name, {})
            for row, want in p.cells().items():
                if got.get(row) != want:
                    out.append((p.name, row))
        return out

    def records(self) -> list[dict]:
        return [{"profile": name, **cells} for name, cells in self.cells.items()]

    def format_table(self, expected: Optional[list] = None) -> str:
        """Rows are gaps, columns are profiles; a ``!`` marks a mismatch."""
        expected = expected or builtin_profiles()
        exp = {p.name: p.cells() for p in expected}
        names = list(self.cells)
        cell_w = max(14, *(len(self.cells[n][r]) + 2 for n in names for r in ROWS))
        row_w = max(len(r) for r in ROWS) + 2
        lines = ["Gap".ljust(row_w) + "".join(n.ljust(cell_w) for n in names)]
        lines.append("-" * (row_w + cell_w * len(names)))
        for r in ROWS:
            cells = []
            for n in names:
                v = self.cells[n][r]
                mark = "" if exp.get(n, {}).get(r) == v else "!"
                cells.append((v + mark).ljust(cell_w))
            lines.append(r.ljust(row_w) + "".join(cells))
        return "\n".join(line.rstrip() for line in lines) + "\n"


def _fresh(size: int = 1 << 14, line: int = 64, plan: Optional[FaultPlan] = None,
           config: Optional[NicConfig] = None):
    sim = Simulator()
    mem = RemoteMemory(size, line)
    mem.register(0, mem.size)
    return sim, mem, Nic(sim, mem, plan, config)


def _payload(n: int, salt: int) -> bytes:
    return bytes((salt * 131 + i * 7) & 0xFF for i in range(n))


def _visibility_run(p: InterconnectProfile, run: ScenarioRun, skip_reflect: bool,
                    ualink_assumption: str) -> RunResult:
    res = RunResult(p.name, "visibility")
    plan = FaultPlan(seed=run.seed, visibility_delay=DelaySpec.constant(run.visibility_delay))
    name = p.name.lower()
    if name == "oae":
        sim, mem, nic = _fresh(plan=plan)
        qp = nic.create_qp(Transport.RC)
        ep = OaeEndpoint(nic, qp, OaeConfig(skip_reflect=skip_reflect))
        h = ep.oae_initiate(_payload(304, 1), invariant("none"), 1)
        sim.run()
        tl = sim.timelines[h.op_id]
        # the application-facing completion of this protocol is the commit
        signal_at = h.committed_at
        res.app_successes = int(h.link.state == LinkState.COMMITTED)
        res.intact_successes = int(res.app_successes and h.delivered == h.transfer.wr.payload)
        res.visible_at_completion = signal_at is not None and tl.t5 is not None and tl.t5 <= signal_at
        res.reflected.append(LinkState.REFLECTING in h.link.history)
        return res
    if name == "nvlink":
        sim, mem, nic = _fresh(plan=plan)
        qp = nic.create_qp(Transport.RC)
        puts = [nic.post_write(qp, _payload(256, k), k * 256, context="ctx") for k in range(3)]
        seen = {}

        def on_signal(tr, rec):
            if tr.context == "signal:ctx":
                for op in puts:
                    nic.promote_now(nic.transfers[op])
                seen["at"] = rec.at
        nic.on_completion.append(on_signal)
        sig = nic.post_write(qp, (1).to_bytes(8, "little"), 4096, context="signal:ctx")
        sim.run()
        res.visible_at_completion = all(
            sim.timelines[op].t5 is not None and sim.timelines[op].t5 <= seen["at"] for op in puts)
        res.app_successes = int(nic.transfers[sig].status == Status.SUCCESS)
        res.intact_successes = int(res.app_successes and all(
            nic.delivered_intact(nic.transfers[op]) for op in puts + [sig]))
        return res
    coherent = name == "cxl" or (name == "ualink" and ualink_assumption == "coherent")
    sim, mem, nic = _fresh(plan=plan, config=NicConfig(coherent=coherent))
    qp = nic.create_qp(Transport.RC)
    op = nic.post_write(qp, _payload(304, 2), 0)
    sim.run()
    tl = sim.timelines[op]
    res.visible_at_completion = tl.t5 == tl.t4
    res.app_successes = int(nic.transfers[op].status == Status.SUCCESS)
    res.intact_successes = int(res.app_successes and nic.delivered_intact(nic.transfers[op]))
    if name == "ualink":
        res.assumption = f"visibility behaviour assumed {ualink_assumption}; no published guarantee"
    if p.ordering_quirk == OrderingQuirk.UIO_FABRIC_DELIVERY:
        sim2, _, nic2 = _fresh(plan=plan, config=NicConfig(coherent=False))
        qp2 = nic2.create_qp(Transport.CONNECTIONLESS)
        op2 = nic2.post_write(qp2, _payload(304, 3), 0)
        sim2.run()
        tl2 = sim2.timelines[op2]
        uio = Verdict.CLOSED if tl2.t5 == tl2.t4 else Verdict.OPEN
        res.notes.append(f"{p.name}-UIO sub-profile visibility: {uio.value} "
                         f"(completion at {tl2.t4}, visible at {tl2.t5})")
    return res


def _sdc_run(p: InterconnectProfile, run: ScenarioRun, skip_reflect: bool) -> RunResult:
    res = RunResult(p.name, "sdc")
    payload_len = 256
    for trial in range(run.trials):
        bit = uniform_int(stream_key(run.seed, trial, 77), 0, 0, payload_len * 8 - 1)
        plan = FaultPlan(seed=run.seed, sdc_flips=(SdcFlip(1, 0, bit),))
        sim, mem, nic = _fresh(plan=plan)
        qp = nic.create_qp(Transport.RC)
        res.sdc_injected += 1
        if p.name == "OAE":
            ep = OaeEndpoint(nic, qp, OaeConfig(skip_reflect=skip_reflect))
            h = ep.oae_initiate(_payload(payload_len, trial), invariant("none"), 1)
            sim.run()
            if h.link.state == LinkState.COMMITTED:
                res.app_successes += 1
                res.intact_successes += int(nic.delivered_intact(h.transfer))
                res.reflected.append(LinkState.REFLECTING in h.link.history)
            elif h.link.reason == RejectReason.SDC_DETECTED:
                res.sdc_detected += 1
        else:
            op = nic.post_write(qp, _payload(payload_len, trial), 0)
            sim.run()
            tr = nic.transfers[op]
            if tr.status == Status.SUCCESS:
                res.app_successes += 1
                res.intact_successes += int(nic.delivered_intact(tr))
                res.reflected.append(False)
    return res


def _torn_run(p: InterconnectProfile, run: ScenarioRun, skip_reflect: bool) -> RunResult:
    res = RunResult(p.name, "torn")
    if p.name == "OAE":
        torn_any = False
        for size in run.sizes:
            n = -(-size // 56)
            for sched in schedules(n, 1, run.seed, run.schedule_limit):
                out = oae_race(sched, 1, 2, payload_len=size, invariant_id="all-versions-equal",
                               skip_reflect=skip_reflect)
                if out.state == LinkState.COMMITTED.value:
                    res.app_successes += 1
                    res.intact_successes += int(not out.committed_torn)
                    res.reflected.append(not skip_reflect)
                    torn_any |= out.committed_torn
        res.boundary = TRANSACTION if not torn_any else AtomicityBoundary(56, 56)
        return res
    bounds = []
    for unit in p.unit_sizes:
        best = None
        for size in run.sizes:
            n = math.ceil(size / unit)
            torn = 0
            for sched in schedules(n, 1, run.seed, run.schedule_limit):
                t, _ = plain_race_fast(sched)
                res.app_successes += 1
                res.intact_successes += int(not t)
                res.reflected.append(False)
                torn += t
            if torn:
                break
            best = size
        bounds.append(best)
    if any(b is None for b in bounds):
        res.notes.append(f"{p.name}: no torn-free size on the probe ladder")
        return res
    res.boundary = AtomicityBoundary(min(bounds), max(bounds))
    return res


def simulate_gap_matrix(suite: list[ScenarioRun], skip_reflect: bool = False,
                        ualink_assumption: str = "coherent") -> GapMatrix:
    """Recompute every profile's Table-style verdicts from simulated runs.

    ``skip_reflect`` breaks the reflecting-phase guard (for testing the
    mismatch path).
    """
    runs = {(r.profile, r.kind): r for r in suite}
    missing = [(p.name, k) for p in builtin_profiles() for k in RUN_KINDS if (p.name, k) not in runs]
    if missing:
        raise ScenarioSuiteIncomplete(f"missing runs: {missing}")
    cells, results, notes = {}, [], []
    for p in builtin_profiles():
        vis = _visibility_run(p, runs[(p.name, "visibility")], skip_reflect, ualink_assumption)
        torn = _torn_run(p, runs[(p.name, "torn")], skip_reflect)
        sdc = _sdc_run(p, runs[(p.name, "sdc")], skip_reflect)
        results += [vis, torn, sdc]
        notes += vis.notes + torn.notes
        if vis.assumption:
            notes.append(f"{p.name}: {vis.assumption}")

        if vis.assumption is not None:
            visibility = Verdict.UNKNOWN  # never resolved by an assumption
        else:
            visibility = Verdict.CLOSED if vis.visible_at_completion else Verdict.OPEN
        successes = torn.app_successes + sdc.app_successes
        intact = torn.intact_successes + sdc.intact_successes
        semantic = Verdict.CLOSED if successes == intact else Verdict.OPEN
        reflected = vis.reflected + torn.reflected + sdc.reflected
        reflecting = (ReflectingPhase.MANDATORY if reflected and all(reflected)
                      else ReflectingPhase.ABSENT)
        if sdc.sdc_injected and sdc.sdc_detected == sdc.sdc_injected:
            detection = SdcDetection.REFLECTION_MISMATCH
        else:
            detection = SdcDetection.NONE
        boundary = str(torn.boundary) if torn.boundary is not None else "undetermined"
        cells[p.name] = dict(zip(ROWS, (visibility.value, semantic.value, boundary,
                                        reflecting.value, detection.value)))
    return GapMatrix(cells, results, notes)
