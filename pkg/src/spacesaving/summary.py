"""Sequential Space Saving summary.

A :class:`StreamSummary` keeps at most ``capacity`` counters. An item that is
already monitored has its counter incremented; an unmonitored item takes a
free counter at frequency 1, or, when all counters are busy, takes over the
minimum counter and inherits its frequency plus one. Among several minimum
counters the one monitoring the smallest item id is evicted, so runs are
reproducible.
"""

from __future__ import annotations

import csv
import heapq
import io
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

from ._kernel import space_saving_kernel
from .errors import InvalidCapacityError

ITEM_DTYPE = np.uint64
FREQ_DTYPE = np.int64

CSV_HEADER = ("item", "est_freq")


class Counter(NamedTuple):
    """One monitored item and its estimated frequency."""

    item: int
    est_freq: int


def sort_key_ascending(counter: Counter) -> tuple[int, int]:
    return counter.est_freq, counter.item


def sort_key_descending(counter: Counter) -> tuple[int, int]:
    return -counter.est_freq, counter.item


class StreamSummary:
    """Bounded set of Space Saving counters.

    Args:
        capacity: number of counters ``k``; must be at least 1.

    Raises:
        InvalidCapacityError: if ``capacity < 1``.
    """

    __slots__ = ("capacity", "processed", "_freq", "_heap")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidCapacityError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.processed = 0
        self._freq: dict[int, int] = {}
        # lazy min-heap of (freq, item); entries that disagree with _freq are stale
        self._heap: list[tuple[int, int]] = []

    @classmethod
    def from_counters(
        cls, capacity: int, counters: Iterable[tuple[int, int]], processed: int = 0
    ) -> "StreamSummary":
        """Build a summary holding exactly ``counters``.

        ``processed`` is taken as given; no conservation check is made because
        merged summaries legitimately violate it.
        """
        s = cls(capacity)
        for item, freq in counters:
            item, freq = int(item), int(freq)
            if freq < 1:
                raise ValueError(f"counter for item {item} has frequency {freq} < 1")
            if item in s._freq:
                raise ValueError(f"duplicate item {item}")
            s._freq[item] = freq
        if len(s._freq) > capacity:
            raise ValueError(f"{len(s._freq)} counters exceed capacity {capacity}")
        s.processed = int(processed)
        s._rebuild_heap()
        return s

    @classmethod
    def from_arrays(
        cls, capacity: int, items: np.ndarray, freqs: np.ndarray, processed: int
    ) -> "StreamSummary":
        s = cls(capacity)
        s._freq = dict(zip(items.tolist(), freqs.tolist()))
        s.processed = int(processed)
        s._rebuild_heap()
        return s

    def copy(self) -> "StreamSummary":
        s = StreamSummary.__new__(StreamSummary)
        s.capacity = self.capacity
        s.processed = self.processed
        s._freq = self._freq.copy()
        s._heap = self._heap.copy()
        return s

    def _rebuild_heap(self) -> None:
        self._heap = [(f, x) for x, f in self._freq.items()]
        heapq.heapify(self._heap)

    def _clean_top(self) -> None:
        heap, freq = self._heap, self._freq
        while heap and freq.get(heap[0][1]) != heap[0][0]:
            heapq.heappop(heap)

    def update(self, x: int) -> None:
        """Consume one occurrence of item ``x``."""
        freq = self._freq
        self.processed += 1
        f = freq.get(x)
        if f is not None:
            f += 1
            freq[x] = f
            heapq.heappush(self._heap, (f, x))
        elif len(freq) < self.capacity:
            freq[x] = 1
            heapq.heappush(self._heap, (1, x))
        else:
            self._clean_top()
            m, victim = heapq.heappop(self._heap)
            del freq[victim]
            freq[x] = m + 1
            heapq.heappush(self._heap, (m + 1, x))
        if len(self._heap) > 4 * self.capacity + 64:
            self._rebuild_heap()

    def extend(self, stream: Iterable[int] | np.ndarray) -> "StreamSummary":
        """Consume a whole sequence using the compiled kernel.

        The result is identical to calling :meth:`update` on every element.
        """
        data = np.ascontiguousarray(np.asarray(stream, dtype=ITEM_DTYPE))
        if data.size == 0:
            return self
        items, freqs = self.to_arrays(pad=True)
        size = space_saving_kernel(data, 0, data.size, self.capacity, items, freqs, len(self._freq))
        self._freq = dict(zip(items[:size].tolist(), freqs[:size].tolist()))
        self.processed += int(data.size)
        self._rebuild_heap()
        return self

    def to_arrays(self, pad: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Counters as ``(items, freqs)`` arrays, in insertion order.

        With ``pad=True`` both arrays have length ``capacity`` (the kernel's
        working layout), otherwise they have one entry per counter.
        """
        size = self.capacity if pad else len(self._freq)
        items = np.zeros(size, dtype=ITEM_DTYPE)
        freqs = np.zeros(size, dtype=FREQ_DTYPE)
        if self._freq:
            n = len(self._freq)
            items[:n] = np.fromiter(self._freq.keys(), dtype=ITEM_DTYPE, count=n)
            freqs[:n] = np.fromiter(self._freq.values(), dtype=FREQ_DTYPE, count=n)
        return items, freqs

    def min_frequency(self) -> int:
        """Smallest estimated frequency, or 0 when no counter is occupied."""
        self._clean_top()
        return self._heap[0][0] if self._heap else 0

    def estimate(self, x: int) -> int | None:
        return self._freq.get(x)

    def counters_ascending(self) -> list[Counter]:
        """Counters by frequency ascending, ties by item id ascending."""
        return sorted((Counter(x, f) for x, f in self._freq.items()), key=sort_key_ascending)

    def counters_descending(self) -> list[Counter]:
        return sorted((Counter(x, f) for x, f in self._freq.items()), key=sort_key_descending)

    def total(self) -> int:
        """Sum of all estimated frequencies."""
        return sum(self._freq.values())

    def __len__(self) -> int:
        return len(self._freq)

    def __contains__(self, x: object) -> bool:
        return x in self._freq

    def __iter__(self) -> Iterator[Counter]:
        return iter(self.counters_ascending())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StreamSummary):
            return NotImplemented
        return (
            self.capacity == other.capacity
            and self.processed == other.processed
            and self._freq == other._freq
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{c.item}:{c.est_freq}" for c in self.counters_ascending())
        return f"StreamSummary(capacity={self.capacity}, processed={self.processed}, {{{body}}})"

    def to_records(self) -> list[tuple[int, int]]:
        """Flat ``(item_id, est_freq)`` records in ascending counter order."""
        return [tuple(c) for c in self.counters_ascending()]

    def dump_csv(self, fh: IO[str]) -> None:
        write_counters_csv(fh, self.counters_ascending())

    def dumps_csv(self) -> str:
        buf = io.StringIO()
        self.dump_csv(buf)
        return buf.getvalue()


def write_counters_csv(fh: IO[str], counters: Iterable[tuple[int, int]]) -> None:
    """Write ``item,est_freq`` rows in the order given."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for item, freq in counters:
        w.writerow((int(item), int(freq)))


def read_counters_csv(fh: IO[str]) -> list[Counter]:
    rows = csv.reader(fh)
    header = next(rows, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected counter CSV header {header!r}")
    return [Counter(int(item), int(freq)) for item, freq in rows]


def new_summary(k: int) -> StreamSummary:
    return StreamSummary(k)


def space_saving(data: np.ndarray, k: int, lo: int = 0, hi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run Space Saving over ``data[lo:hi]`` from an empty summary.

    Returns the occupied counters as ``(items, freqs)`` arrays. This is the
    allocation-light path used by worker threads; it releases the GIL.
    """
    if k < 1:
        raise InvalidCapacityError(f"capacity must be >= 1, got {k}")
    hi = data.size if hi is None else hi
    items = np.zeros(k, dtype=ITEM_DTYPE)
    freqs = np.zeros(k, dtype=FREQ_DTYPE)
    size = space_saving_kernel(data, lo, max(lo, hi), k, items, freqs, 0)
    return items[:size], freqs[:size]
