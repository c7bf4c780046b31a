import binascii
import random

import pytest
from hypothesis import given, strategies as st

from completionsim.engine import RemoteMemory, Simulator, Stage
from completionsim.errors import LinkBusy, NotYetVisible, WrongState
from completionsim.faults import DelaySpec, FaultPlan, SdcFlip
from completionsim.layout import DhtEntry, encode_versioned
from completionsim.oae import (LEGAL_TRANSITIONS, Link, LinkState, OaeConfig, OaeEndpoint,
                               RejectReason, checksum, commit_guard, invariant)
from completionsim.verbs import Nic, Status, Transport

S = LinkState


def endpoint(plan=None, config=None, auto=True, size=4096):
    sim = Simulator()
    mem = RemoteMemory(size)
    mem.register(0, size)
    nic = Nic(sim, mem, plan)
    ep = OaeEndpoint(nic, nic.create_qp(Transport.RC), config or OaeConfig(), auto=auto)
    return sim, nic, ep


def test_initiate_moves_to_tentative_and_records_submission():
    sim, nic, ep = endpoint()
    h = ep.oae_initiate(b"abc", invariant("none"), 1)
    assert h.link.state == S.TENTATIVE
    assert sim.timeline(h.op_id).t0 == 0


def test_initiate_while_busy():
    sim, nic, ep = endpoint()
    ep.oae_initiate(b"abc", invariant("none"), 1)
    with pytest.raises(LinkBusy):
        ep.oae_initiate(b"def", invariant("none"), 1)


def test_integrate_before_visibility():
    sim, nic, ep = endpoint(FaultPlan(visibility_delay=DelaySpec.constant(10)), auto=False)
    h = ep.oae_initiate(b"abc", invariant("none"), 1)
    sim.run_until(sim.clock + 5)
    with pytest.raises(NotYetVisible):
        ep.receiver_integrate(h)


def test_clean_digest_and_commit():
    sim, nic, ep = endpoint(auto=False)
    data = b"clean payload"
    h = ep.oae_initiate(data, invariant("none"), 1)
    sim.run()
    d = ep.receiver_integrate(h)
    assert d.invariant_verdict and d.payload_checksum == binascii.crc32(data)
    assert ep.sender_resolve(h, d) == S.COMMITTED
    tl = sim.timeline(h.op_id)
    assert tl.t6 is not None and tl.t6 - tl.t4 >= 0
    assert h.delivered == data


def test_torn_assembly_fails_invariant():
    old = encode_versioned(DhtEntry.make(1).pack(), 1)
    new = encode_versioned(DhtEntry.make(2).pack(), 2)
    torn = new[:128] + old[128:]
    spec = invariant("all-versions-equal")
    assert spec.check(old) and spec.check(new) and not spec.check(torn)


def test_bit_flip_is_detected_while_verbs_report_success():
    sim, nic, ep = endpoint(FaultPlan(sdc_flips=(SdcFlip(1, 0, 17),)))
    h = ep.oae_initiate(b"\x55" * 256, invariant("none"), 1)
    sim.run()
    assert h.verbs_status == Status.SUCCESS
    assert h.link.state == S.REJECTED and h.link.reason == RejectReason.SDC_DETECTED
    assert h.delivered is None


def test_schema_skew():
    sim, nic, ep = endpoint(config=OaeConfig(receiver_schema=2))
    h = ep.oae_initiate(b"abc", invariant("none"), 1)
    sim.run()
    assert h.link.reason == RejectReason.SCHEMA_MISMATCH


def test_resolve_outside_reflecting():
    sim, nic, ep = endpoint(auto=False)
    h = ep.oae_initiate(b"abc", invariant("none"), 1)
    with pytest.raises(WrongState):
        ep.sender_resolve(h, None)


def test_reflect_timeout_when_return_path_drops():
    for seed in range(200):
        plan = FaultPlan(seed=seed, chunk_loss_rate=0.5)
        sim, nic, ep = endpoint(plan, OaeConfig(reflect_loss_exempt=False, reflect_timeout_ticks=30))
        h = ep.oae_initiate(b"abc", invariant("none"), 1)
        sim.run()
        if h.link.reason == RejectReason.REFLECT_TIMEOUT:
            assert sim.timeline(h.op_id).t6 is None
            return
    pytest.fail("no seed dropped the digest")


@given(st.integers(0, 2 ** 30), st.integers(0, 30))
def test_link_is_tentative_at_every_completion(seed, delay):
    sim, nic, ep = endpoint(FaultPlan(seed=seed, visibility_delay=DelaySpec(0, delay),
                                      chunk_loss_rate=0.01))
    h = ep.oae_initiate(bytes(range(256)) * 8, invariant("none"), 1)
    sim.run()
    assert h.state_at_completion == S.TENTATIVE
    if h.link.state == S.COMMITTED:
        assert sim.timeline(h.op_id).t6 is not None
        assert h.digest.invariant_verdict and h.digest.payload_checksum == h.expected_checksum


def test_direct_commit_refused():
    assert commit_guard([S.TENTATIVE, S.COMMITTED]) == [True, False]


def test_idle_to_reflecting_refused():
    assert commit_guard([S.REFLECTING]) == [False]


def test_rejected_state_is_unchanged():
    link = Link()
    commit_guard([S.COMMITTED], link)
    assert link.state == S.IDLE


def _walk_oracle(attempts):
    """Independent graph walk: the legal edges, written out by hand."""
    edges = {("Idle", "Tentative"), ("Tentative", "Reflecting"),
             ("Reflecting", "Committed"), ("Reflecting", "Rejected")}
    state, path, verdicts = "Idle", ["Idle"], []
    for a in attempts:
        ok = (state, a.value) in edges
        verdicts.append(ok)
        if ok:
            state = a.value
            path.append(state)
    return verdicts, path


@given(st.lists(st.sampled_from(list(S)), max_size=12))
def test_guard_matches_graph_walk(attempts):
    link = Link()
    verdicts = commit_guard(attempts, link)
    expected, path = _walk_oracle(attempts)
    assert verdicts == expected
    assert [s.value for s in link.history] == path


def test_invariant_library():
    assert set(("none", "all-versions-equal", "status-in-set", "monotonic-version", "dht-entry")) \
        <= set(__import__("completionsim.oae", fromlist=["INVARIANTS"]).INVARIANTS)
    bad = encode_versioned(DhtEntry.make(3, status=9).pack(), 3)
    good = encode_versioned(DhtEntry.make(3).pack(), 3)
    assert not invariant("status-in-set").check(bad)
    assert invariant("dht-entry").check(good, 2)
    assert not invariant("monotonic-version").check(good, 3)
    with pytest.raises(KeyError):
        invariant("no-such")


def test_checksum_matches_reference_crc():
    rng = random.Random(5)
    for _ in range(50):
        data = rng.randbytes(rng.randrange(1, 500))
        assert checksum(data) == binascii.crc32(data)
