"""Merging Space Saving summaries.

``combine`` merges two summaries of equal capacity ``k`` into one: an item
monitored by both gets the sum of its two estimates; an item monitored by
only one side gets its estimate plus the other side's minimum frequency (an
upper bound on how often it could have occurred there unseen). A side that
still has free counters contributes 0 instead, since nothing was ever
evicted from it. The merged candidates, at most ``2k`` of them, are cut back
to the ``k`` largest.

``prune_threshold`` is the final filter applied once at the root of a
reduction: it keeps only candidates that could be ``k``-majority items.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import IncompatibleSummariesError
from .summary import FREQ_DTYPE, ITEM_DTYPE, Counter, StreamSummary, sort_key_descending


class Partial(NamedTuple):
    """Array form of a summary as passed around a reduction tree."""

    items: np.ndarray
    freqs: np.ndarray
    processed: int
    capacity: int

    @classmethod
    def empty(cls, capacity: int) -> "Partial":
        return cls(np.zeros(0, dtype=ITEM_DTYPE), np.zeros(0, dtype=FREQ_DTYPE), 0, capacity)

    @classmethod
    def from_summary(cls, s: StreamSummary) -> "Partial":
        items, freqs = s.to_arrays()
        return cls(items, freqs, s.processed, s.capacity)

    def to_summary(self) -> StreamSummary:
        return StreamSummary.from_arrays(self.capacity, self.items, self.freqs, self.processed)

    def min_frequency(self) -> int:
        return int(self.freqs.min()) if self.freqs.size else 0

    def slack(self) -> int:
        return unmonitored_bound(self.min_frequency(), self.items.size, self.capacity)


def unmonitored_bound(min_freq: int, size: int, capacity: int) -> int:
    """Largest number of times an unmonitored item can have occurred.

    While a counter is still free nothing has ever been evicted, so an item
    without a counter never occurred. Once full, an unmonitored item occurred
    at most as often as the current minimum counter.
    """
    return min_freq if size >= capacity else 0


def top_k(items: np.ndarray, freqs: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the ``k`` largest counters, ties at the cut going to smaller ids.

    The result is ordered by frequency descending, then item id ascending.
    """
    order = np.lexsort((items, -freqs))[:k]
    return items[order], freqs[order]


def combine_partials(a: Partial, b: Partial, k: int) -> Partial:
    m1 = a.slack()
    m2 = b.slack()

    matched_b = np.zeros(b.items.size, dtype=bool)
    est_a = a.freqs + m2
    if a.items.size and b.items.size:
        order_b = np.argsort(b.items, kind="stable")
        sorted_b = b.items[order_b]
        pos = np.searchsorted(sorted_b, a.items)
        pos[pos == sorted_b.size] = 0
        hit = sorted_b[pos] == a.items
        idx_b = order_b[pos[hit]]
        est_a[hit] = a.freqs[hit] + b.freqs[idx_b]
        matched_b[idx_b] = True

    rest = ~matched_b
    items = np.concatenate((a.items, b.items[rest]))
    freqs = np.concatenate((est_a, b.freqs[rest] + m1))
    items, freqs = top_k(items, freqs, k)
    return Partial(items, freqs, a.processed + b.processed, k)


def combine(s1: StreamSummary, s2: StreamSummary, k: int | None = None) -> StreamSummary:
    """Merge two summaries into a new one of the same capacity.

    Inputs are left untouched. An empty summary has minimum frequency 0 and
    so acts as an identity on either side.

    Raises:
        IncompatibleSummariesError: if the capacities differ, or differ from
            an explicitly given ``k``.
    """
    if s1.capacity != s2.capacity:
        raise IncompatibleSummariesError(
            f"cannot combine summaries of capacity {s1.capacity} and {s2.capacity}"
        )
    if k is None:
        k = s1.capacity
    elif k != s1.capacity:
        raise IncompatibleSummariesError(f"summaries have capacity {s1.capacity}, combine asked for k={k}")
    merged = combine_partials(Partial.from_summary(s1), Partial.from_summary(s2), k)
    return merged.to_summary()


def candidate_counts(s1: StreamSummary, s2: StreamSummary) -> dict[int, int]:
    """The combined estimates of every candidate before the cut to ``k``.

    Plain-dict restatement of the merge rules, used for inspection and tests.
    """
    m1 = unmonitored_bound(s1.min_frequency(), len(s1), s1.capacity)
    m2 = unmonitored_bound(s2.min_frequency(), len(s2), s2.capacity)
    out: dict[int, int] = {}
    for c in s1.counters_ascending():
        other = s2.estimate(c.item)
        out[c.item] = c.est_freq + (other if other is not None else m2)
    for c in s2.counters_ascending():
        if c.item not in out:
            out[c.item] = c.est_freq + m1
    return out


def frequency_threshold(n: int, k: int) -> int:
    """Smallest count that makes an item a ``k``-majority item of ``n``."""
    return n // k + 1


def prune_threshold(s: StreamSummary | Partial, n: int, k: int) -> list[Counter]:
    """Counters whose estimate reaches ``n // k + 1``, largest first."""
    if isinstance(s, Partial):
        counters = (Counter(int(x), int(f)) for x, f in zip(s.items.tolist(), s.freqs.tolist()))
    else:
        counters = iter(s.counters_ascending())
    threshold = frequency_threshold(n, k)
    return sorted((c for c in counters if c.est_freq >= threshold), key=sort_key_descending)
