import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spacesaving import Counter, IncompatibleSummariesError, StreamSummary, combine, prune_threshold
from spacesaving.merge import Partial, candidate_counts, combine_partials, frequency_threshold

from conftest import brute_counts, ids
from exhaustive import reachable

a, b, c, d = ids("abcd")


def summary(k, records, processed=0):
    return StreamSummary.from_counters(k, records, processed)


def ss(k, stream):
    s = StreamSummary(k)
    for x in stream:
        s.update(x)
    return s


def test_hand_executed_combine():
    s1 = summary(2, [(a, 3), (b, 1)], 4)
    s2 = summary(2, [(a, 2), (c, 2)], 4)
    assert candidate_counts(s1, s2) == {a: 5, b: 3, c: 3}
    out = combine(s1, s2, 2)
    assert out.to_records() == [(b, 3), (a, 5)]
    assert out.processed == 8


def test_empty_is_two_sided_identity(rng):
    s = ss(3, rng.integers(1, 8, size=40).tolist())
    empty = StreamSummary(3)
    assert combine(s, empty) == s
    assert combine(empty, s) == s


def test_capacity_mismatch():
    with pytest.raises(IncompatibleSummariesError):
        combine(StreamSummary(2), StreamSummary(3))
    with pytest.raises(IncompatibleSummariesError):
        combine(StreamSummary(2), StreamSummary(2), 3)


def test_inputs_untouched():
    s1 = summary(2, [(a, 3), (b, 1)], 4)
    s2 = summary(2, [(a, 2), (c, 2)], 4)
    before = (s1.to_records(), s2.to_records())
    combine(s1, s2)
    assert (s1.to_records(), s2.to_records()) == before


def test_prune_keeps_smallest_ids_on_tie():
    s1 = summary(2, [(d, 4), (c, 4)])
    s2 = summary(2, [(b, 4), (a, 4)])
    # everything ends at 8; a and b win on id
    assert sorted(combine(s1, s2).to_records()) == [(a, 8), (b, 8)]


@pytest.mark.parametrize("n,k,expected", [(10, 3, 4), (4, 2, 3), (0, 2, 1), (7, 7, 2)])
def test_frequency_threshold(n, k, expected):
    assert frequency_threshold(n, k) == expected


def test_prune_threshold_example():
    s = summary(3, [(a, 5), (b, 4), (c, 3)])
    assert prune_threshold(s, 10, 3) == [Counter(a, 5), Counter(b, 4)]


def test_prune_threshold_nothing_survives():
    s = summary(3, [(a, 2), (b, 1)])
    assert prune_threshold(s, 10, 3) == []


def test_prune_threshold_hand_simulation():
    s = ss(2, ids("abac"))
    assert prune_threshold(s, 4, 2) == []
    assert max(brute_counts(ids("abac")).values()) == 2


def test_prune_threshold_descending_order():
    s = summary(4, [(c, 9), (a, 9), (b, 12), (d, 1)])
    assert prune_threshold(s, 20, 4) == [Counter(b, 12), Counter(a, 9), Counter(c, 9)]


def test_partial_and_summary_paths_agree(rng):
    for _ in range(200):
        k = int(rng.integers(1, 6))
        s1 = ss(k, rng.integers(0, 10, size=int(rng.integers(0, 30))).tolist())
        s2 = ss(k, rng.integers(0, 10, size=int(rng.integers(0, 30))).tolist())
        merged = combine(s1, s2)
        ref = candidate_counts(s1, s2)
        assert len(ref) <= 2 * k
        expected = sorted(ref.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        assert sorted(merged.to_records()) == sorted(expected)
        p = combine_partials(Partial.from_summary(s1), Partial.from_summary(s2), k)
        assert p.to_summary() == merged
        assert prune_threshold(p, 20, k) == prune_threshold(merged, 20, k)


def test_every_split_point_of_fixed_stream(rng):
    stream = rng.choice([1, 1, 1, 2, 2, 3, 4, 5, 6], size=50).tolist()
    truth = brute_counts(stream)
    for k in (2, 3, 4):
        for cut in range(len(stream) + 1):
            merged = combine(ss(k, stream[:cut]), ss(k, stream[cut:]), k)
            for x, est in merged.to_records():
                assert est >= truth[x]
            reported = {cnt.item for cnt in prune_threshold(merged, 50, k)}
            assert {x for x, f in truth.items() if f * k > 50} <= reported


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 12), max_size=80),
    st.lists(st.integers(0, 12), max_size=80),
    st.integers(2, 6),
)
def test_merge_guarantees_random(s1, s2, k):
    merged = combine(ss(k, s1), ss(k, s2), k)
    truth = brute_counts(s1 + s2)
    n = len(s1) + len(s2)
    assert len(merged) <= k
    for x, est in merged.to_records():
        assert est >= truth[x]
    reported = {cnt.item for cnt in prune_threshold(merged, n, k)}
    assert {x for x, f in truth.items() if f * k > n} <= reported


def test_merge_exhaustive_small():
    """All stream pairs with |s1| + |s2| <= 9 over 4 items, k in {2, 3}."""
    maxlen = 9
    for k in (2, 3):
        levels = reachable(k, maxlen)
        for l1 in range(maxlen + 1):
            for l2 in range(maxlen + 1 - l1):
                n = l1 + l2
                for s1, f1 in levels[l1].values():
                    for s2, f2 in levels[l2].values():
                        merged = combine(s1, s2, k)
                        assert len(merged) <= k
                        est = np.array([merged.estimate(x) or -1 for x in range(4)])
                        kept = est >= 0
                        reported = np.zeros(4, dtype=bool)
                        for cnt in prune_threshold(merged, n, k):
                            reported[cnt.item] = True
                        f = f1[:, None, :] + f2[None, :, :]
                        assert np.all(~kept | (est >= f))
                        assert np.all(~(f * k > n) | reported)
