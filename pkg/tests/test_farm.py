import ast
import inspect
import itertools

import pytest

from completionsim import farm
from completionsim.errors import CasConflict, TornReadUnresolved
from completionsim.farm import (VersionedObject, farm_read, farm_read_attempt, farm_write,
                                farm_write_steps, run_to_end)
from completionsim.faults import enumerate_interleavings
from completionsim.layout import LINE, LINE_DATA, split_versioned, versioned_line_count
from completionsim.torn import dht_versions, farm_race, plain_race


OLD, NEW = dht_versions(1, 2)


def test_line_layout():
    obj = VersionedObject.allocate(b"a" * 100, 3)
    raw = obj.memory.cpu_read(0, LINE)
    assert raw[LINE_DATA:] == (3).to_bytes(8, "little")
    assert obj.n_lines == versioned_line_count(100) == 2


def test_entry_needs_six_versioned_lines():
    assert versioned_line_count(304) == 6


def test_single_writer():
    obj = VersionedObject.allocate(OLD, 1)
    out = farm_write(obj, NEW, 2)
    assert out.committed and obj.committed_version == 2
    assert {l.version for l in obj.lines} == {2}
    assert obj.payload() == NEW


def test_version_must_advance_by_one():
    obj = VersionedObject.allocate(OLD, 1)
    with pytest.raises(ValueError):
        farm_write(obj, NEW, 3)


@pytest.mark.parametrize("first", [0, 1])
def test_two_writers_one_conflict(first):
    obj = VersionedObject.allocate(OLD, 1)
    writers = [farm_write_steps(obj, NEW, 2, expect=1),
               farm_write_steps(obj, b"x" * 304, 2, expect=1)]
    # both write all their lines, then race on the CAS in the given order
    for w in writers:
        for _ in range(obj.n_lines):
            next(w)
    outcomes = []
    for w in (writers[first], writers[1 - first]):
        try:
            run_to_end(w)
            outcomes.append("ok")
        except CasConflict:
            outcomes.append("conflict")
    assert outcomes == ["ok", "conflict"]


def test_quiet_read_has_no_retries():
    obj = VersionedObject.allocate(OLD, 1)
    res = farm_read(obj)
    assert (res.data, res.version, res.retries) == (OLD, 1, 0)


def test_writer_mid_lines_is_detected():
    obj = VersionedObject.allocate(OLD, 1)
    w = farm_write_steps(obj, NEW, 2)
    next(w)
    next(w)
    attempt = run_to_end(farm_read_attempt(obj))
    assert not attempt.consistent
    assert set(attempt.observations) == {1, 2}


def test_permanent_racer_with_zero_budget():
    obj = VersionedObject.allocate(OLD, 1)
    w = farm_write_steps(obj, NEW, 2)
    next(w)
    with pytest.raises(TornReadUnresolved):
        farm_read(obj, max_retries=0)


def test_racer_during_every_attempt_exhausts_budget():
    obj = VersionedObject.allocate(OLD, 1)
    versions = itertools.count(2)

    def racer(attempt, step):
        if step == ("lines", 0):
            v = next(versions)
            obj.write_line(0, b"\0" * LINE_DATA, v)

    with pytest.raises(TornReadUnresolved) as err:
        farm_read(obj, max_retries=4, on_step=racer)
    assert err.value.attempts == 5


@pytest.mark.parametrize("size, passes", [(304, 1), (304, 2), (280, 1), (280, 2)])
def test_enumeration_never_returns_mixed_versions(size, passes):
    old, new = OLD[:size], NEW[:size]
    n = versioned_line_count(size)
    torn_attempts = 0
    for sched in enumerate_interleavings(n, passes):
        out = farm_race(sched, old, new, 1)
        assert out.data in (old, new)
        assert out.version == (1 if out.data == old else 2)
        torn_attempts += out.torn_attempt
        assert out.torn_attempt == (out.retries > 0)
    assert torn_attempts > 0


def test_retry_iff_observations_differ():
    for sched in enumerate_interleavings(3, 1):
        out = farm_race(sched, OLD[:168], NEW[:168], 1)
        assert out.torn_attempt == (out.retries >= 1)


def test_plain_read_over_same_enumeration_tears():
    torn = sum(plain_race(s, OLD, NEW, LINE).torn for s in enumerate_interleavings(5, 1))
    assert torn >= 1


def test_read_loop_consults_only_local_reads():
    # the retry decision reads memory and versions, never an acknowledgment
    src = inspect.getsource(farm.farm_read) + inspect.getsource(farm.farm_read_attempt)
    names = {n.id for n in ast.walk(ast.parse(src)) if isinstance(n, ast.Name)}
    names |= {n.attr for n in ast.walk(ast.parse(src)) if isinstance(n, ast.Attribute)}
    assert not {"ack", "acknowledgment", "digest", "completion", "cq", "poll_cq"} & names
