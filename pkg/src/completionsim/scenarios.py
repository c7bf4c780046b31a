"""Scenario runner: wires the simulator layers together per named
experiment and aggregates their counters into a :class:`GapReport`."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Optional

import numpy as np

from . import hashing
from .config import ScenarioConfig, default_config
from .ecmp import EcmpConfig, ecmp_load, exact_no_collision
from .engine import EventKind, RemoteMemory, Simulator, Stage
from .errors import MatrixMismatch
from .faults import FaultPlan, SdcFlip
from .layout import LINE, dht_entry_pair, raw_line_count, versioned_line_count
from .oae import LinkState, OaeConfig, OaeEndpoint, invariant
from .profiles import builtin_profiles, default_suite, simulate_gap_matrix
from .sdr import report as partial_report
from .torn import FarmRacer, OaeRacer, PlainRacer, schedules
from .verbs import Nic, NicConfig, Status, Transport

MODES = {
    "dht-torn": ("plain", "farm", "oae"),
    "partial-loss": ("RC", "UC", "SDR"),
    "sdc": ("rdma", "oae"),
    "pfc-stall": ("rdma",),
    "ecmp": ("hash",),
    "table1": ("simulated",),
}

TAG_SDC_BIT = (1 << 62) + 3


@dataclass
class GapReport:
    scenario: str
    mode: str
    seed: int
    runs: int = 0
    # application-facing successes: the CQE for plain modes, the commit for OAE
    completions: int = 0
    valid_completions: int = 0
    misleading_completions: int = 0
    verbs_successes: int = 0
    failures: int = 0
    torn_observed: int = 0
    torn_returned: int = 0
    committed_torn: int = 0
    retries: int = 0
    sdc_injected: int = 0
    sdc_detected: int = 0
    chunks_retransmitted: int = 0
    rejected: dict = field(default_factory=dict)
    visibility_gap_mean: float = 0.0
    visibility_gap_max: int = 0
    semantic_gap_mean: float = 0.0
    semantic_gap_max: int = 0
    events: int = 0
    non_monotone: int = 0
    extra: dict = field(default_factory=dict)

    def violations(self) -> list[str]:
        out = []
        if self.sdc_detected > self.sdc_injected:
            out.append(f"sdc_detected {self.sdc_detected} > sdc_injected {self.sdc_injected}")
        if self.misleading_completions > self.completions:
            out.append(f"misleading {self.misleading_completions} > completions {self.completions}")
        if self.misleading_completions != self.completions - self.valid_completions:
            out.append("misleading completions do not equal completions minus valid ones")
        if self.non_monotone:
            out.append(f"{self.non_monotone} timelines with stages out of order")
        out.extend(self.extra.get("violations", []))
        return out

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=str) + "\n"

    def format_text(self) -> str:
        d = self.as_dict()
        extra = d.pop("extra")
        lines = [f"{k:<24} {v}" for k, v in d.items()]
        lines += [f"{k:<24} {v}" for k, v in extra.items() if k != "violations"]
        bad = self.violations()
        lines.append("violations               " + ("; ".join(bad) if bad else "none"))
        return "\n".join(lines) + "\n"


@dataclass
class ScenarioResult:
    report: GapReport
    sim: Optional[Simulator]
    config: ScenarioConfig

    @property
    def trace_text(self) -> str:
        return self.sim.trace_text() if self.sim is not None else ""

    def write_trace(self, path) -> None:
        Path(path).write_text(self.trace_text, encoding="utf-8", newline="\n")


# -- shared plumbing ---------------------------------------------------------

def fault_plan(cfg: ScenarioConfig, **changes) -> FaultPlan:
    kw = dict(seed=cfg.seed, chunk_loss_rate=cfg["faults.chunk_loss_rate"],
              sdc_flips=cfg["faults.sdc_flips"], visibility_delay=cfg["faults.visibility_delay"],
              pauses=cfg["faults.pauses"], drop_chunks=cfg["faults.drop_chunks"],
              wire_jitter=cfg["faults.wire_jitter"])
    kw.update(changes)
    return FaultPlan(**kw)


def nic_config(cfg: ScenarioConfig) -> NicConfig:
    return NicConfig(dma_ticks=cfg["timing.dma_ticks"], wire_ticks=cfg["timing.wire_ticks"],
                     ack_ticks=cfg["timing.ack_ticks"], timeout_ticks=cfg["timing.timeout_ticks"],
                     max_passes=cfg["transport.max_passes"],
                     visibility_mode=cfg["memory.visibility_mode"],
                     line_stride_ticks=cfg["memory.line_stride_ticks"])


def oae_config(cfg: ScenarioConfig) -> OaeConfig:
    return OaeConfig(invariant_id=cfg["invariant.id"],
                     expected_schema=cfg["invariant.expected_schema"],
                     receiver_schema=cfg["invariant.receiver_schema"],
                     reflect_loss_exempt=cfg["oae.reflect_loss_exempt"],
                     reflect_timeout_ticks=cfg["oae.reflect_timeout_ticks"],
                     reflect_latency_ticks=cfg["oae.reflect_latency_ticks"],
                     skip_reflect=cfg["oae.skip_reflect"])


def quiet_window(cfg: ScenarioConfig, length: int) -> int:
    """Ticks after which one isolated transfer of ``length`` bytes has settled."""
    plan = fault_plan(cfg)
    wire = cfg["timing.wire_ticks"] + plan.wire_jitter.hi
    passes = cfg["transport.max_passes"]
    lines = -(-length // LINE)
    return (cfg["timing.dma_ticks"] + passes * (wire + cfg["timing.timeout_ticks"])
            + cfg["timing.ack_ticks"] + plan.visibility_delay.hi
            + lines * cfg["memory.line_stride_ticks"] + cfg["oae.reflect_timeout_ticks"]
            + cfg["oae.reflect_latency_ticks"] + sum(p.duration for p in plan.pauses) + 8)


def payload_bytes(seed: int, salt: int, n: int) -> bytes:
    """Gradient-like float32 payload (``n`` is rounded up to 4 bytes, then cut)."""
    rng = np.random.default_rng([seed, salt])
    return rng.standard_normal(-(-n // 4)).astype("<f4").tobytes()[:n]


def attach_receiver_app(nic: Nic, invariant_id: str) -> dict:
    """Plain receiver: checks each visible write and treats a pass as agreement.

    Returns the dict of per-op verdicts it fills in.
    """
    spec = invariant(invariant_id)
    verdicts: dict[int, bool] = {}

    def check(tr) -> str:
        data = nic.memory.cpu_read(tr.wr.remote_offset, tr.length)
        ok = spec.check(data)
        verdicts[tr.op_id] = ok
        if ok:
            nic.sim.record_stage(tr.op_id, Stage.SEMANTIC_AGREEMENT)
        return f"{invariant_id} {'holds' if ok else 'fails'}"

    nic.on_visible.append(
        lambda tr: nic.sim.after(0, EventKind.AGREEMENT, tr.op_id, lambda: check(tr)))
    return verdicts


def fill_gaps(report: GapReport, sim: Simulator, ops=None) -> None:
    vis, sem = [], []
    for op_id, tl in sim.timelines.items():
        if not tl.is_monotone():
            report.non_monotone += 1
        if ops is not None and op_id not in ops:
            continue
        if tl.t4 is None:
            continue
        if tl.t5 is not None:
            vis.append(tl.t5 - tl.t4)
        if tl.t6 is not None:
            sem.append(tl.t6 - tl.t4)
    if vis:
        report.visibility_gap_mean, report.visibility_gap_max = fmean(vis), max(vis)
    if sem:
        report.semantic_gap_mean, report.semantic_gap_max = fmean(sem), max(sem)
    report.events = len(sim.trace)


def _tally_rdma(report: GapReport, nic: Nic, transfers) -> None:
    """CQE-facing accounting: a success is valid iff it reached agreement intact."""
    for tr in transfers:
        report.chunks_retransmitted += tr.chunks_retransmitted
        if tr.status == Status.SUCCESS:
            report.verbs_successes += 1
            report.completions += 1
            if nic.sim.timeline(tr.op_id).t6 is not None and nic.delivered_intact(tr):
                report.valid_completions += 1
        else:
            report.failures += 1
    report.misleading_completions = report.completions - report.valid_completions


def _tally_oae(report: GapReport, ep: OaeEndpoint, expected: dict) -> None:
    """Commit-facing accounting; ``expected`` maps op id to the bytes sent."""
    for op_id, h in ep.handles.items():
        tr = h.transfer
        report.chunks_retransmitted += tr.chunks_retransmitted
        if tr.status == Status.SUCCESS:
            report.verbs_successes += 1
        else:
            report.failures += 1
        if h.link.state == LinkState.COMMITTED:
            report.completions += 1
            if h.delivered == expected[op_id]:
                report.valid_completions += 1
        elif h.link.state == LinkState.REJECTED:
            key = h.link.reason.value
            report.rejected[key] = report.rejected.get(key, 0) + 1
    report.misleading_completions = report.completions - report.valid_completions


# -- dht-torn ------------------------------------------------------------------

def _dht_torn(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    sim = Simulator()
    size = cfg["object.size_bytes"]
    passes = int(cfg["object.reader_passes"])
    rep = GapReport("dht-torn", mode, cfg.seed)
    old, new = dht_entry_pair(size)
    units = raw_line_count(size) if mode == "plain" else versioned_line_count(size)
    enum = cfg["object.interleavings"] == "enumerate-all"
    scheds = list(schedules(units, passes, cfg.seed, limit=cfg["object.random_schedules"],
                            mode="enumerate" if enum else "random"))
    rep.runs = len(scheds)
    outcomes = []
    step_kind = {"writer": EventKind.WRITER_STEP, "reader": EventKind.READER_STEP}

    def drive(racer, subject: int, schedule, start: int, on_done) -> None:
        for j, step in enumerate(schedule):
            sim.at(start + j, step_kind[step.actor.value], subject,
                   lambda step=step: racer.step(step))
        sim.at(start + len(schedule), EventKind.MARK, subject, lambda: on_done(racer))

    if mode in ("plain", "farm"):
        def done(racer) -> str:
            out = racer.finish()
            outcomes.append(out)
            return "torn" if getattr(out, "torn", False) or getattr(out, "torn_attempt", False) else "clean"

        for k, schedule in enumerate(scheds):
            if mode == "plain":
                racer = PlainRacer(old, new, LINE)
            else:
                racer = FarmRacer(old, new, 1, cfg["object.max_retries"])
            drive(racer, sim.new_op(), schedule, k * (len(schedule) + 1), done)
        sim.run()
        if mode == "plain":
            rep.torn_observed = rep.torn_returned = sum(o.torn for o in outcomes)
        else:
            rep.torn_observed = sum(o.torn_attempt for o in outcomes)
            rep.torn_returned = sum(o.data not in (old, new) for o in outcomes)
            rep.retries = sum(o.retries for o in outcomes)
        rep.completions = rep.verbs_successes = len(outcomes)
        rep.valid_completions = rep.completions - rep.torn_returned
        rep.misleading_completions = rep.torn_returned
        fill_gaps(rep, sim)
        return ScenarioResult(rep, sim, cfg)

    # oae: each schedule races a plain writer against receiver-side assembly
    window = quiet_window(cfg, units * LINE) + 2 * units * (passes + 1) + 4
    ocfg = oae_config(cfg)
    plan = fault_plan(cfg, sdc_flips=(), drop_chunks=frozenset())
    racers = []

    def launch(schedule, start):
        racer = OaeRacer(sim, 1, 2, size, config=ocfg, nic_config=nic_config(cfg), plan=plan)
        racers.append(racer)

        def begin() -> str:
            h = racer.start()
            racer.nic.on_visible.append(
                lambda tr: drive(racer, tr.op_id, schedule, sim.clock + 1, finish))
            return f"initiate op {h.op_id}"

        sim.at(start, EventKind.MARK, 0, begin)

    def finish(racer) -> str:
        out = racer.finish()
        outcomes.append(out)
        return f"{out.state} {out.reason or ''}".strip()

    for k, schedule in enumerate(scheds):
        launch(schedule, k * window)
    sim.run()
    rep.torn_observed = sum(o.torn for o in outcomes)
    rep.committed_torn = sum(o.committed_torn for o in outcomes)
    rep.torn_returned = rep.committed_torn
    for racer in racers:
        _tally_oae(rep, racer.ep, {racer.handle.op_id: racer.sent})
    rep.extra["torn_rejected_invariant"] = sum(
        o.torn and o.reason == "InvariantViolation" for o in outcomes)
    fill_gaps(rep, sim)
    return ScenarioResult(rep, sim, cfg)


# -- partial-loss ----------------------------------------------------------

def _partial_loss(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    sim = Simulator()
    size = cfg["object.size_bytes"]
    mem = RemoteMemory(size)
    mem.register(0, size)
    nic = Nic(sim, mem, fault_plan(cfg), nic_config(cfg))
    transport = Transport.RC if mode == "RC" else Transport.UC
    qp = nic.create_qp(transport, cfg["transport.mtu_bytes"], cfg["transport.priority_class"])
    verdicts = attach_receiver_app(nic, cfg["invariant.id"])
    first_pass = {}

    def on_pass(tr, lost):
        if tr.attempt == 0:
            first_pass["lost"] = list(lost)
            if tr.bitmap is not None:
                first_pass["report"] = partial_report(tr.op_id, tr.bitmap.copy())

    nic.on_pass.append(on_pass)
    op = nic.post_write(qp, payload_bytes(cfg.seed, 1, size), 0, selective=(mode == "SDR"))
    sim.run()
    tr = nic.transfers[op]
    rep = GapReport("partial-loss", mode, cfg.seed, runs=1)
    _tally_rdma(rep, nic, [tr])
    rep.extra.update(chunks=tr.n_chunks, status=tr.status.value, passes=tr.attempt + 1,
                     first_pass_lost=len(first_pass.get("lost", [])),
                     agreement=verdicts.get(op, False))
    if "report" in first_pass:
        pc = first_pass["report"]
        missing = pc.bitmap.missing()
        rep.extra.update(missing=missing if len(missing) <= 16 else f"{len(missing)} chunks",
                         delivered=pc.percent, bitmap=pc.bitmap.rle())
    fill_gaps(rep, sim)
    return ScenarioResult(rep, sim, cfg)


# -- sdc ---------------------------------------------------------------------

def sdc_flip_plan(cfg: ScenarioConfig, trials: int, chunk_bytes: int) -> tuple:
    """One seeded single-bit flip in chunk 0 of each trial's op (op ids 1..trials)."""
    if cfg["faults.sdc_flips"]:
        return cfg["faults.sdc_flips"]
    bits = chunk_bytes * 8
    return tuple(SdcFlip(op, 0, hashing.uniform_int(hashing.stream_key(cfg.seed, op, TAG_SDC_BIT),
                                                      0, 0, bits - 1))
                 for op in range(1, trials + 1))


def _sdc(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    sim = Simulator()
    trials, size = cfg["trials"], cfg["object.size_bytes"]
    mtu = cfg["transport.mtu_bytes"]
    mem = RemoteMemory(trials * size)
    mem.register(0, mem.size)
    plan = fault_plan(cfg, sdc_flips=sdc_flip_plan(cfg, trials, min(mtu, size)))
    nic = Nic(sim, mem, plan, nic_config(cfg))
    qp = nic.create_qp(Transport(cfg["transport.mode"]), mtu, cfg["transport.priority_class"])
    stride = quiet_window(cfg, size)
    sent = {}
    ep = verdicts = None
    if mode == "oae":
        ep = OaeEndpoint(nic, qp, oae_config(cfg))
        spec = invariant(cfg["invariant.id"])
    else:
        verdicts = attach_receiver_app(nic, cfg["invariant.id"])

    def trial(k: int) -> str:
        data = payload_bytes(cfg.seed, k, size)
        if ep is not None:
            ep.reset()
            op = ep.oae_initiate(data, spec, cfg["invariant.expected_schema"], k * size).op_id
        else:
            op = nic.post_write(qp, data, k * size)
        sent[op] = data
        return f"trial {k} op {op}"

    for k in range(trials):
        sim.at(k * stride, EventKind.MARK, 0, lambda k=k: trial(k))
    sim.run()
    rep = GapReport("sdc", mode, cfg.seed, runs=trials)
    transfers = [nic.transfers[op] for op in sorted(sent)]
    rep.sdc_injected = sum(tr.corrupted for tr in transfers)
    if ep is not None:
        _tally_oae(rep, ep, sent)
        rep.sdc_detected = sum(ep.handles[tr.op_id].link.state == LinkState.REJECTED
                               for tr in transfers if tr.corrupted)
    else:
        _tally_rdma(rep, nic, transfers)
        rep.sdc_detected = sum(not verdicts.get(tr.op_id, True) for tr in transfers if tr.corrupted)
    fill_gaps(rep, sim)
    return ScenarioResult(rep, sim, cfg)


# -- pfc-stall ---------------------------------------------------------------

def _pfc_once(cfg: ScenarioConfig, plan: FaultPlan):
    sim = Simulator()
    n, size = cfg["pfc.ops_per_class"], cfg["object.size_bytes"]
    mem = RemoteMemory(2 * n * size)
    mem.register(0, mem.size)
    nic = Nic(sim, mem, plan, nic_config(cfg))
    mtu = cfg["transport.mtu_bytes"]
    qps = [nic.create_qp(Transport(cfg["transport.mode"]), mtu, cls) for cls in (0, 1)]
    attach_receiver_app(nic, cfg["invariant.id"])
    ops = {0: [], 1: []}
    interval = cfg["pfc.post_interval_ticks"]

    def post(cls: int, j: int) -> str:
        k = cls * n + j
        ops[cls].append(nic.post_write(qps[cls], payload_bytes(cfg.seed, k, size), k * size))
        return f"post class {cls} #{j}"

    for j in range(n):
        for cls in (0, 1):
            sim.at(j * interval, EventKind.MARK, 0, lambda cls=cls, j=j: post(cls, j))
    sim.run()
    return sim, nic, ops


def _pfc_stall(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    plan = fault_plan(cfg)
    sim, nic, ops = _pfc_once(cfg, plan)
    base_sim, _, base_ops = _pfc_once(cfg, fault_plan(cfg, pauses=()))
    rep = GapReport("pfc-stall", mode, cfg.seed, runs=sum(len(v) for v in ops.values()))
    _tally_rdma(rep, nic, [nic.transfers[o] for cls in (0, 1) for o in ops[cls]])
    paused = {p.priority_class for p in plan.pauses}
    extra = {}
    for cls in (0, 1):
        stall = [sim.timeline(o).t4 - sim.timeline(o).t3 for o in ops[cls]]
        extra[f"class{cls}_placement_to_completion"] = stall
    # a pause on one class leaves every other class's timelines untouched
    for cls in (0, 1):
        if cls in paused:
            continue
        same = [sim.timeline(a).ticks == base_sim.timeline(b).ticks
                for a, b in zip(ops[cls], base_ops[cls])]
        extra[f"class{cls}_unaffected"] = all(same)
        if not all(same):
            extra.setdefault("violations", []).append(f"unpaused class {cls} timelines changed")
    rep.extra.update(extra)
    fill_gaps(rep, sim)
    return ScenarioResult(rep, sim, cfg)


# -- ecmp / table1 -----------------------------------------------------------

def _ecmp(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    ec = EcmpConfig(cfg["ecmp.flows"], cfg["ecmp.paths"], cfg["ecmp.qps"], cfg.seed, cfg["ecmp.trials"])
    res = ecmp_load(ec)
    rep = GapReport("ecmp", mode, cfg.seed, runs=ec.trials)
    rep.extra.update(res.summary())
    units = ec.flow_count * ec.qps_per_flow
    rep.extra["exact_no_collision"] = float(exact_no_collision(units, ec.path_count))
    return ScenarioResult(rep, None, cfg)


@dataclass
class Table1Result:
    matrix: object
    mismatches: list
    text: str

    @property
    def records(self) -> list[dict]:
        return self.matrix.records()

    @property
    def ok(self) -> bool:
        return not self.mismatches


def emit_table1(seed: int = 0, skip_reflect: bool = False, ualink_assumption: str = "coherent",
                strict: bool = False) -> Table1Result:
    """Simulate every profile, lay the result beside the built-in encoding."""
    matrix = simulate_gap_matrix(default_suite(seed), skip_reflect, ualink_assumption)
    expected = builtin_profiles()
    mismatches = matrix.diff(expected)
    text = "simulated (a '!' marks a cell that differs from the built-in encoding)\n"
    text += matrix.format_table(expected)
    text += "\nbuilt-in\n" + _expected_table(expected)
    if matrix.notes:
        text += "\nnotes\n" + "".join(f"  {n}\n" for n in matrix.notes)
    text += f"\nmismatches: {len(mismatches)}\n"
    text += "".join(f"  {p} / {r}\n" for p, r in mismatches)
    if strict and mismatches:
        raise MatrixMismatch(mismatches)
    return Table1Result(matrix, mismatches, text)


def _expected_table(expected) -> str:
    from .profiles import GapMatrix
    return GapMatrix({p.name: p.cells() for p in expected}, [], []).format_table(expected)


def _table1(cfg: ScenarioConfig, mode: str) -> ScenarioResult:
    res = emit_table1(cfg.seed, cfg["oae.skip_reflect"], cfg["profile.ualink_assumption"])
    rep = GapReport("table1", mode, cfg.seed, runs=len(res.matrix.runs))
    rep.extra["matrix"] = res.records
    rep.extra["mismatches"] = [f"{p} / {r}" for p, r in res.mismatches]
    if res.mismatches:
        rep.extra["violations"] = [f"{len(res.mismatches)} cells differ from the built-in matrix"]
    rep.extra["table"] = res.text
    return ScenarioResult(rep, None, cfg)


RUNNERS = {
    "dht-torn": _dht_torn,
    "partial-loss": _partial_loss,
    "sdc": _sdc,
    "pfc-stall": _pfc_stall,
    "ecmp": _ecmp,
    "table1": _table1,
}


def run_scenario(config: ScenarioConfig | str, mode: Optional[str] = None,
                 trace_path=None) -> ScenarioResult:
    """Run one scenario; deterministic in (config, mode)."""
    cfg = default_config(config) if isinstance(config, str) else config
    mode = mode or cfg["mode"] or MODES[cfg.scenario][0]
    if mode not in MODES[cfg.scenario]:
        raise ValueError(f"scenario {cfg.scenario!r} has modes {MODES[cfg.scenario]}, not {mode!r}")
    result = RUNNERS[cfg.scenario](cfg, mode)
    trace_path = trace_path or cfg["output.trace"]
    if trace_path:
        result.write_trace(trace_path)
    if cfg["output.report"]:
        Path(cfg["output.report"]).write_text(result.report.to_json(), encoding="utf-8")
    return result


@dataclass
class Comparison:
    scenario: str
    reports: dict

    COLUMNS = ("completions", "valid_completions", "misleading_completions", "verbs_successes",
               "failures", "torn_observed", "torn_returned", "committed_torn", "retries",
               "sdc_injected", "sdc_detected", "chunks_retransmitted", "visibility_gap_max",
               "semantic_gap_max")

    def deltas(self) -> dict:
        """Fields whose value differs between modes."""
        out = {}
        for col in self.COLUMNS:
            vals = {m: getattr(r, col) for m, r in self.reports.items()}
            if len(set(vals.values())) > 1:
                out[col] = vals
        return out

    def format_table(self) -> str:
        modes = list(self.reports)
        w = max(10, *(len(m) + 2 for m in modes))
        changed = self.deltas()
        lines = ["field".ljust(26) + "".join(m.ljust(w) for m in modes)]
        for col in self.COLUMNS:
            mark = "*" if col in changed else " "
            lines.append(f"{mark} {col}".ljust(26)
                         + "".join(str(getattr(self.reports[m], col)).ljust(w) for m in modes))
        lines.append("('*' marks fields that differ between modes)")
        return "\n".join(l.rstrip() for l in lines) + "\n"

    def violations(self) -> list[str]:
        return [f"{m}: {v}" for m, r in self.reports.items() for v in r.violations()]


def compare_modes(config: ScenarioConfig | str, modes) -> Comparison:
    """Same config and seed under each mode."""
    cfg = default_config(config) if isinstance(config, str) else config
    modes = list(modes)
    if len(modes) < 2:
        raise ValueError("compare needs at least two modes")
    return Comparison(cfg.scenario, {m: run_scenario(cfg, m).report for m in modes})
