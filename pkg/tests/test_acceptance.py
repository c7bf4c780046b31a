"""Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even
without ``-s``) or directly with ``python3 tests/test_acceptance.py``.
"""
import contextlib
import io
import math
import random
import sys
import time
from pathlib import Path

import pytest

from completionsim import kernels
from completionsim.config import default_config
from completionsim.ecmp import EcmpConfig, ecmp_load
from completionsim.errors import StageRegression
from completionsim.faults import enumerate_interleavings
from completionsim.fuzz import random_run
from completionsim.hashing import loss_threshold
from completionsim.oae import Link, LinkState, commit_guard
from completionsim.scenarios import emit_table1, run_scenario
from completionsim.torn import dht_versions, plain_race
from completionsim.layout import LINE
from completionsim import cli


def verdict_line(number, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] #{number:<2} {title}: {detail}"


def torn_oracle(n):
    # single-pass merges minus the all-old and all-new ones (C(2n,n)/(n+1) each)
    return math.comb(2 * n, n) - 2 * (math.comb(2 * n, n) // (n + 1))


def check_stage_monotonicity(workdir):
    start = time.perf_counter()
    regressions = non_monotone = 0
    for seed in range(10_000):
        try:
            run = random_run(seed)
        except StageRegression:
            regressions += 1
            continue
        non_monotone += len(run.non_monotone())
    elapsed = time.perf_counter() - start
    ok = regressions == 0 and non_monotone == 0 and elapsed <= 60
    return ok, (
        f"10^4 scenarios, {regressions} regressions, {non_monotone} out-of-order timelines, "
        f"{elapsed:.1f}s (limit 60s)"
    )


def check_completion_fallacy(workdir):
    checked, problems = 0, []
    for scenario, extra in (("partial-loss", {"faults__drop_chunks": "none"}),
                            ("sdc", {"trials": 100})):
        cfg = default_config(scenario, faults__visibility_delay="10", **extra)
        res = run_scenario(cfg)
        rep, sim = res.report, res.sim
        fallacy = [tl for tl in sim.timelines.values()
                   if tl.t4 is not None and (tl.t6 is None or tl.t6 > tl.t4)]
        if not fallacy:
            problems.append(f"{scenario}: no completion ahead of agreement")
        if not (rep.semantic_gap_max == 10 and rep.semantic_gap_mean == 10):
            problems.append(f"{scenario}: semantic gap {rep.semantic_gap_mean}/{rep.semantic_gap_max}")
        checked += 1
    return not problems, (
        f"{checked} runs with visibility delay 10, semantic gap exactly 10"
        + (f"; {problems}" if problems else "")
    )


def check_torn_read_enumeration(workdir):
    start = time.perf_counter()
    plain = run_scenario("dht-torn", "plain").report
    farm = run_scenario("dht-torn", "farm").report
    oae = run_scenario("dht-torn", "oae").report
    elapsed = time.perf_counter() - start
    old, new = dht_versions()
    direct_plain = sum(plain_race(s, old, new, LINE).torn for s in enumerate_interleavings(5, 1))
    ok = (plain.runs == math.comb(10, 5)
          and plain.torn_observed == direct_plain == torn_oracle(5) >= 1
          and farm.torn_returned == 0 and farm.torn_observed > 0
          and oae.committed_torn == 0
          and oae.torn_observed == torn_oracle(6)
          and oae.rejected.get("InvariantViolation") == oae.torn_observed
          and elapsed <= 30)
    return ok, (
        f"plain torn {plain.torn_observed}/{plain.runs}; farm torn returns {farm.torn_returned} "
        f"({farm.torn_observed} retried attempts); oae committed torn {oae.committed_torn}, "
        f"{oae.rejected.get('InvariantViolation', 0)}/{oae.torn_observed} torn rejected as "
        f"InvariantViolation; {elapsed:.1f}s (limit 30s)"
    )


def check_whole_message_semantics(workdir):
    rc = run_scenario(default_config("partial-loss"), "RC").report
    uc = run_scenario(default_config("partial-loss"), "UC").report
    sdr = run_scenario(default_config("partial-loss"), "SDR").report
    # full scale: 262144 one-byte chunks, chunk 4242 dropped once
    big = run_scenario(default_config("partial-loss", transport__mtu_bytes=1,
                                      object__size_bytes=262144,
                                      faults__drop_chunks="1:4242"), "SDR").report
    ok = (uc.extra["status"] == "failure"
          and sdr.extra["missing"] == [511]
          and sdr.chunks_retransmitted == 1 and rc.chunks_retransmitted == 1024
          and big.extra["chunks"] == 262144 and big.extra["delivered"] == "99.9996%"
          and f"{262143 / 262144 * 100:.6g}%" == "99.9996%")
    return ok, (
        f"UC {uc.extra['status']}; SDR missing {sdr.extra['missing']}, resent "
        f"{sdr.chunks_retransmitted}; RC resent {rc.chunks_retransmitted}; "
        f"N=262144 delivered {big.extra['delivered']}"
    )


def check_rare_loss_magnitude(workdir):
    messages, n_chunks, rate = 100_000, 262_144, 1e-6
    closed = (1 - rate) ** n_chunks
    start = time.perf_counter()
    intact = kernels.intact_messages(2024, 1, messages, n_chunks, 0, loss_threshold(rate))
    elapsed = time.perf_counter() - start
    p = intact / messages
    ok = abs(p - closed) <= 0.01 and elapsed <= 120
    return ok, (
        f"Monte Carlo {p:.4f} vs closed form {closed:.4f} (tolerance 0.01), "
        f"{messages} messages, {kernels.BACKEND} backend, {elapsed:.1f}s (limit 120s)"
    )


def check_sdc_detection_split(workdir):
    start = time.perf_counter()
    rdma = run_scenario(default_config("sdc", trials=1000), "rdma").report
    oae = run_scenario(default_config("sdc", trials=1000), "oae").report
    elapsed = time.perf_counter() - start
    ok = (rdma.sdc_injected == oae.sdc_injected == 1000
          and rdma.verbs_successes == 1000 and rdma.misleading_completions == 1000
          and rdma.sdc_detected == 0
          and oae.verbs_successes == 1000 and oae.rejected == {"SdcDetected": 1000}
          and oae.sdc_detected == 1000
          and elapsed <= 30)
    return ok, (
        f"verbs success {rdma.verbs_successes / 10:.0f}%, misleading "
        f"{rdma.misleading_completions / 10:.0f}%, OAE SdcDetected "
        f"{oae.rejected.get('SdcDetected', 0) / 10:.0f}%, RDMA detection "
        f"{rdma.sdc_detected / 10:.0f}%; {elapsed:.1f}s (limit 30s)"
    )


def check_table1_reproduction(workdir):
    res = emit_table1()
    status = _quiet(lambda: cli.main(["table1"]))
    ualink = res.matrix.cells["UALink"]["T4->T5 (visibility)"]
    ok = res.ok and len(res.records) == 5 and ualink == "unknown" and status == 0
    return ok, (
        f"{len(res.mismatches)} mismatches over {len(res.records)} profiles, UALink "
        f"visibility {ualink}, exit status {status}"
    )


def _quiet(fn):
    with contextlib.redirect_stdout(io.StringIO()):
        return fn()


LEGAL = {(LinkState.IDLE, LinkState.TENTATIVE), (LinkState.TENTATIVE, LinkState.REFLECTING),
         (LinkState.REFLECTING, LinkState.COMMITTED), (LinkState.REFLECTING, LinkState.REJECTED)}


def check_guard_soundness(workdir):
    rng = random.Random(8)
    states = list(LinkState)
    bad_paths = direct_commits = accepted = 0
    for _ in range(10_000):
        attempts = [rng.choice(states) for _ in range(rng.randrange(1, 12))]
        link = Link()
        before = LinkState.IDLE
        for target, ok in zip(attempts, commit_guard(attempts, link)):
            if ok:
                accepted += 1
                if (before, target) not in LEGAL:
                    bad_paths += 1
                if (before, target) == (LinkState.TENTATIVE, LinkState.COMMITTED):
                    direct_commits += 1
                before = target
        hist = link.history
        if any((a, b) not in LEGAL for a, b in zip(hist, hist[1:])):
            bad_paths += 1
    ok = bad_paths == 0 and direct_commits == 0 and accepted > 0
    return ok, (
        f"10^4 sequences, {accepted} accepted transitions, {bad_paths} off-graph, "
        f"{direct_commits} Tentative->Committed"
    )


def check_ecmp_collision(workdir):
    exact = math.perm(16, 8) / 16 ** 8
    q1 = ecmp_load(EcmpConfig(8, 16, 1, seed=9, trials=100_000))
    q16 = ecmp_load(EcmpConfig(8, 16, 16, seed=9, trials=100_000))
    mc = q1.no_collision_probability
    ok = abs(mc - exact) <= 0.02 and q16.mean_normalized_max_load < q1.mean_normalized_max_load
    return ok, (
        f"no-collision {mc:.4f} vs exact 16!/(8!*16^8) = {exact:.4f} (tolerance 0.02); "
        f"normalized max load q=16 {q16.mean_normalized_max_load:.3f} < "
        f"q=1 {q1.mean_normalized_max_load:.3f}"
    )


def check_determinism(workdir):
    base = Path(workdir)
    cases = [("dht-torn", "plain"), ("dht-torn", "farm"), ("dht-torn", "oae"),
             ("partial-loss", "RC"), ("partial-loss", "UC"), ("partial-loss", "SDR"),
             ("sdc", "rdma"), ("sdc", "oae"), ("pfc-stall", "rdma"), ("ecmp", "hash"),
             ("table1", "simulated")]
    differing = []
    for scenario, mode in cases:
        cfg = default_config(scenario, seed=31, trials=200, faults__visibility_delay="0..12",
                             faults__chunk_loss_rate="0.001", ecmp__trials="2000")
        outs = []
        for k in range(2):
            path = base / f"{scenario}-{mode}-{k}.trace"
            rep = run_scenario(cfg, mode, trace_path=path).report
            outs.append((path.read_bytes(), rep.to_json()))
        if outs[0] != outs[1]:
            differing.append(f"{scenario}/{mode}")
    fuzz_diff = sum(random_run(s).sim.trace_text() != random_run(s).sim.trace_text()
                    for s in range(200))
    ok = not differing and fuzz_diff == 0
    return ok, (
        f"{len(cases)} scenario/mode pairs and 200 random scenarios re-run, "
        f"{len(differing) + fuzz_diff} differing traces"
    )


CRITERIA = [
    (1, "stage monotonicity", check_stage_monotonicity),
    (2, "completion fallacy", check_completion_fallacy),
    (3, "torn-read enumeration", check_torn_read_enumeration),
    (4, "whole-message semantics", check_whole_message_semantics),
    (5, "rare-loss livelock magnitude", check_rare_loss_magnitude),
    (6, "SDC detection split", check_sdc_detection_split),
    (7, "Table 1 reproduction", check_table1_reproduction),
    (8, "OAE guard soundness", check_guard_soundness),
    (9, "ECMP collision", check_ecmp_collision),
    (10, "determinism", check_determinism),
]


@pytest.mark.slow
@pytest.mark.parametrize("number, title, check", CRITERIA,
                         ids=[f"{n:02d}-{t.split()[0].lower()}" for n, t, _ in CRITERIA])
def test_criterion(number, title, check, tmp_path, request):
    ok, detail = check(tmp_path)
    line = verdict_line(number, title, ok, detail)
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n" + line, flush=True)
    assert ok, line


if __name__ == "__main__":
    import tempfile
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for number, title, check in CRITERIA:
            ok, detail = check(tmp)
            print(verdict_line(number, title, ok, detail), flush=True)
            failed += not ok
    sys.exit(1 if failed else 0)
