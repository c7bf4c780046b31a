import itertools
import math

import pytest
from hypothesis import given, strategies as st

from completionsim.errors import OutOfRange, TooLarge
from completionsim.faults import (Actor, FaultPlan, Pause, corrupt, decide_loss,
                                  enumerate_interleavings, interleaving_count, lost_chunks,
                                  pause_class, random_interleaving, validate_schedule)
from completionsim.hashing import loss_threshold, stream_key
from completionsim import kernels
from completionsim.oae import checksum
from completionsim.torn import plain_race_fast


def test_rate_zero_never_loses():
    plan = FaultPlan(seed=1, chunk_loss_rate=0.0)
    assert not any(decide_loss(plan, op, c) for op in range(5) for c in range(200))


def test_rate_one_always_loses():
    plan = FaultPlan(seed=1, chunk_loss_rate=1.0)
    assert all(decide_loss(plan, op, c) for op in range(5) for c in range(200))


def test_loss_decisions_are_pure():
    a, b = FaultPlan(seed=9, chunk_loss_rate=0.2), FaultPlan(seed=9, chunk_loss_rate=0.2)
    assert lost_chunks(a, 3, 500) == lost_chunks(b, 3, 500)
    assert lost_chunks(a, 3, 500) == [i for i in range(500) if decide_loss(a, 3, i)]


@pytest.mark.slow
def test_rare_loss_rate_over_1e8_draws():
    threshold = loss_threshold(1e-6)
    draws = 10 ** 8
    per_op = 10 ** 6
    lost = sum(kernels.count_losses(stream_key(2024, op), 0, per_op, threshold)
               for op in range(draws // per_op))
    assert abs(lost / draws - 1e-6) <= 0.1e-6


def test_flip_bit_three():
    assert corrupt(b"\x00", 3) == b"\x08"


@given(st.binary(min_size=1, max_size=64), st.data())
def test_double_flip_restores(payload, data):
    bit = data.draw(st.integers(0, 8 * len(payload) - 1))
    assert corrupt(corrupt(payload, bit), bit) == payload


def test_flip_out_of_range():
    with pytest.raises(OutOfRange):
        corrupt(b"ab", 16)


@given(st.binary(min_size=1, max_size=512), st.data())
def test_any_single_flip_changes_checksum(payload, data):
    bit = data.draw(st.integers(0, 8 * len(payload) - 1))
    assert checksum(corrupt(payload, bit)) != checksum(payload)


def test_pause_outside_window_adds_nothing():
    plan = FaultPlan(pauses=(Pause(0, 10, 10),))
    assert pause_class(plan, 0, 5) == 0
    assert pause_class(plan, 0, 20) == 0


def test_pause_defers_to_window_end():
    plan = FaultPlan(pauses=(Pause(0, 10, 10),))
    assert 12 + pause_class(plan, 0, 12) == 20


def test_pause_ignores_other_classes():
    plan = FaultPlan(pauses=(Pause(0, 10, 10),))
    assert pause_class(plan, 1, 12) == 0


def test_one_line_one_pass_has_two_orderings():
    scheds = list(enumerate_interleavings(1, 1))
    assert len(scheds) == 2
    assert {s[0].actor for s in scheds} == {Actor.WRITER, Actor.READER}


def _brute_force_schedules(n, p):
    """Distinct merges built by recursion over remaining writer/reader steps."""
    out = []

    def go(prefix, w, r):
        if w == n and r == n * p:
            out.append(tuple(prefix))
            return
        if w < n:
            go(prefix + [("writer", w)], w + 1, r)
        if r < n * p:
            go(prefix + [("reader", r % n)], w, r + 1)

    go([], 0, 0)
    return out


@pytest.mark.parametrize("n, p", [(2, 1), (3, 1), (2, 2), (4, 1), (3, 2)])
def test_enumeration_matches_brute_force(n, p):
    ours = {tuple((s.actor.value, s.line_index) for s in sched)
            for sched in enumerate_interleavings(n, p)}
    brute = set(_brute_force_schedules(n, p))
    assert ours == brute
    assert len(ours) == interleaving_count(n, p) == math.comb(n * (1 + p), n)


def test_two_lines_one_pass_is_six():
    assert len(list(enumerate_interleavings(2, 1))) == 6


def test_enumeration_limits():
    with pytest.raises(TooLarge):
        next(enumerate_interleavings(7, 1))
    with pytest.raises(TooLarge):
        next(enumerate_interleavings(2, 3))


def test_five_line_object_has_mixed_reads():
    torn = [s for s in enumerate_interleavings(5, 1) if plain_race_fast(s)[0]]
    assert torn


@given(st.integers(1, 8), st.integers(1, 3), st.integers(0, 2 ** 32), st.integers(0, 1000))
def test_random_schedules_are_valid(n, p, seed, index):
    s = random_interleaving(n, p, seed, index)
    assert validate_schedule(s, n, p)
    assert s == random_interleaving(n, p, seed, index)
