import math

from completionsim.faults import enumerate_interleavings
from completionsim.torn import dht_versions, oae_race, plain_race, plain_race_fast, schedules
from completionsim.layout import LINE


def torn_oracle(n):
    """Single-pass plain reads over n lines: a read is clean iff every line
    read old or every line read new.

    Reading all-new means each write i precedes read i. Counting merges with
    that property is the ballot-style count C(2n, n) / (n + 1); the all-old
    count is the same by symmetry.
    """
    clean_each = math.comb(2 * n, n) // (n + 1)
    return math.comb(2 * n, n) - 2 * clean_each


def test_plain_torn_count_matches_closed_form():
    for n in range(1, 7):
        torn = sum(plain_race_fast(s)[0] for s in enumerate_interleavings(n, 1))
        assert torn == torn_oracle(n)


def test_plain_entry_counts():
    assert torn_oracle(5) == 168
    torn = sum(plain_race(s, *dht_versions(), LINE).torn for s in enumerate_interleavings(5, 1))
    assert torn == 168


def test_oae_race_never_commits_a_torn_assembly():
    outcomes = [oae_race(s, 1, 2) for s in enumerate_interleavings(6, 1)]
    assert not any(o.committed_torn for o in outcomes)
    torn = [o for o in outcomes if o.torn]
    assert torn and all(o.state == "Rejected" and o.reason == "InvariantViolation" for o in torn)
    assert len(torn) == torn_oracle(6)


def test_broken_guard_commits_torn_assemblies():
    outcomes = [oae_race(s, 1, 2, skip_reflect=True) for s in enumerate_interleavings(4, 1)]
    assert any(o.committed_torn for o in outcomes)


def test_schedule_modes():
    assert len(list(schedules(3, 1))) == 20
    assert len(list(schedules(8, 2, limit=50))) == 50
