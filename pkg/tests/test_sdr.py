from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from completionsim.engine import RemoteMemory, Simulator
from completionsim.errors import NothingMissing, OutOfRange
from completionsim.faults import FaultPlan
from completionsim.sdr import (ChunkBitmap, on_chunk_received, report, selective_retransmit,
                               whole_message_plan)
from completionsim.verbs import Nic, Status, Transport


def test_set_is_idempotent():
    bm = ChunkBitmap(8)
    on_chunk_received(bm, 0)
    on_chunk_received(bm, 0)
    assert bm.delivered_count == 1


def test_out_of_range():
    with pytest.raises(OutOfRange):
        on_chunk_received(ChunkBitmap(4), 4)


def test_full_and_partial_fractions():
    bm = ChunkBitmap(1024)
    for i in range(1024):
        if i != 511:
            on_chunk_received(bm, i)
    assert report(1, bm).delivered_fraction == Fraction(1023, 1024)
    on_chunk_received(bm, 511)
    assert report(1, bm).delivered_fraction == 1


def test_one_in_a_gibibyte_prints_as_expected():
    bm = ChunkBitmap(262144)
    bm.bits[:] = True
    bm.bits[4242] = False
    rep = report(1, bm)
    assert rep.delivered_fraction == Fraction(262143, 262144)
    assert rep.percent == "99.9996%"


def test_zero_chunks_sent():
    assert report(1, ChunkBitmap(16)).delivered_fraction == 0


def test_selective_plans():
    bm = ChunkBitmap(262144)
    bm.bits[:] = True
    bm.bits[511] = False
    assert selective_retransmit(1, bm).chunks == (511,)
    assert len(whole_message_plan(1, 262144)) == 262144
    bm = ChunkBitmap(10)
    bm.bits[:] = True
    bm.bits[[3, 7]] = False
    assert selective_retransmit(1, bm).chunks == (3, 7)


def test_nothing_missing():
    bm = ChunkBitmap(3)
    bm.bits[:] = True
    with pytest.raises(NothingMissing):
        selective_retransmit(1, bm)


@given(st.sets(st.integers(0, 299)))
def test_rle_round_trip(missing):
    bm = ChunkBitmap(300)
    bm.bits[:] = True
    for i in missing:
        bm.bits[i] = False
    assert ChunkBitmap.from_rle(bm.rle()) == bm


def _run(selective, seed, rate=0.0, drops=frozenset(), n=256, transport=Transport.UC):
    plan = FaultPlan(seed=seed, chunk_loss_rate=rate, drop_chunks=drops)
    sim = Simulator()
    mem = RemoteMemory(n * 64)
    mem.register(0, mem.size)
    nic = Nic(sim, mem, plan)
    qp = nic.create_qp(transport, 64)
    seen = []
    nic.on_pass.append(lambda tr, lost: seen.append(list(lost)))
    op = nic.post_write(qp, bytes(range(256)) * (n // 4), 0, selective=selective)
    sim.run()
    return nic, nic.transfers[op], seen


def test_loss_pattern_replays_from_seed():
    _, a, _ = _run(True, 77, 0.1)
    _, b, _ = _run(True, 77, 0.1)
    assert a.bitmap == b.bitmap and a.losses == b.losses


@given(st.sets(st.integers(0, 255), min_size=1, max_size=40))
def test_retransmission_economy(lost):
    drops = frozenset((1, i) for i in lost)
    _, sdr_tr, _ = _run(True, 0, drops=drops)
    _, rc_tr, _ = _run(False, 0, drops=drops, transport=Transport.RC)
    assert sdr_tr.chunks_retransmitted == len(lost)
    assert rc_tr.chunks_retransmitted == 256
    assert Fraction(rc_tr.chunks_retransmitted, sdr_tr.chunks_retransmitted) == Fraction(256, len(lost))


@given(st.integers(0, 10 ** 6))
def test_rounds_resend_each_loss_once_and_terminate(seed):
    nic, tr, passes = _run(True, seed, rate=0.2)
    assert tr.status == Status.SUCCESS and tr.bitmap.complete()
    assert nic.delivered_intact(tr)
    # each pass resends exactly what the previous pass lost
    assert tr.chunks_retransmitted == sum(len(p) for p in passes[:-1])
    assert passes[-1] == []


@given(st.integers(0, 10 ** 6), st.floats(0.0, 0.3))
def test_binary_status_is_a_projection_of_the_bitmap(seed, rate):
    plan_rate = rate
    _, tr, passes = _run(False, seed, rate=plan_rate)
    bm = ChunkBitmap(tr.n_chunks)
    for i in range(tr.n_chunks):
        if i not in set(passes[0]):
            bm.set(i)
    assert (tr.status == Status.FAILURE) == (not bm.complete())
