"""Compiled Space Saving update loop.

The kernel mirrors :meth:`spacesaving.summary.StreamSummary.update` exactly,
including the eviction tie-break (smallest item id among the minimum
counters), so a summary built here is indistinguishable from one built item
by item in Python. It is compiled with ``nogil=True`` so worker threads run it
concurrently.

Layout: counters live in two parallel arrays indexed by a stable slot number.
An open-addressing table (linear probing, backward-shift deletion) maps item
to slot, and an indexed binary min-heap over slots, keyed by
``(freq, item)``, gives the eviction victim at the root.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_EMPTY = -1


@njit
def _home(x, shift):
    return np.int64((x * _GOLDEN) >> shift)


@njit
def _find(keys, vals, mask, shift, x):
    i = _home(x, shift)
    while vals[i] != _EMPTY:
        if keys[i] == x:
            return i
        i = (i + 1) & mask
    return -1 - i  # encodes the free slot where x would go


@njit
def _delete(keys, vals, mask, shift, i):
    j = i
    while True:
        j = (j + 1) & mask
        if vals[j] == _EMPTY:
            break
        h = _home(keys[j], shift)
        # keep keys[j] in place when its home lies cyclically in (i, j]
        if i <= j:
            if i < h <= j:
                continue
        elif h > i or h <= j:
            continue
        keys[i] = keys[j]
        vals[i] = vals[j]
        i = j
    vals[i] = _EMPTY


@njit
def _less(items, freqs, a, b):
    fa = freqs[a]
    fb = freqs[b]
    return fa < fb or (fa == fb and items[a] < items[b])


@njit
def _sift_up(heap, hpos, items, freqs, pos):
    c = heap[pos]
    while pos > 0:
        parent = (pos - 1) >> 1
        pc = heap[parent]
        if not _less(items, freqs, c, pc):
            break
        heap[pos] = pc
        hpos[pc] = pos
        pos = parent
    heap[pos] = c
    hpos[c] = pos


@njit
def _sift_down(heap, hpos, items, freqs, pos, size):
    c = heap[pos]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _less(items, freqs, heap[right], heap[child]):
            child = right
        cc = heap[child]
        if not _less(items, freqs, cc, c):
            break
        heap[pos] = cc
        hpos[cc] = pos
        pos = child
    heap[pos] = c
    hpos[c] = pos


@njit(nogil=True, cache=True)
def space_saving_kernel(data, lo, hi, k, items, freqs, size):
    """Feed ``data[lo:hi]`` into the counters ``items[:size]``/``freqs[:size]``.

    ``items`` and ``freqs`` must have length ``k``; they are updated in place.
    Returns the new number of occupied counters.
    """
    bits = 1
    while (1 << bits) < 2 * k:
        bits += 1
    mask = (1 << bits) - 1
    shift = np.uint64(64 - bits)
    keys = np.zeros(1 << bits, dtype=np.uint64)
    vals = np.full(1 << bits, _EMPTY, dtype=np.int64)
    heap = np.empty(k, dtype=np.int64)
    hpos = np.empty(k, dtype=np.int64)

    for c in range(size):
        slot = -1 - _find(keys, vals, mask, shift, items[c])
        keys[slot] = items[c]
        vals[slot] = c
        heap[c] = c
        _sift_up(heap, hpos, items, freqs, c)

    for idx in range(lo, hi):
        x = data[idx]
        slot = _find(keys, vals, mask, shift, x)
        if slot >= 0:
            c = vals[slot]
            freqs[c] += 1
            _sift_down(heap, hpos, items, freqs, hpos[c], size)
        elif size < k:
            c = size
            items[c] = x
            freqs[c] = 1
            slot = -1 - slot
            keys[slot] = x
            vals[slot] = c
            heap[size] = c
            size += 1
            _sift_up(heap, hpos, items, freqs, size - 1)
        else:
            c = heap[0]
            old = _find(keys, vals, mask, shift, items[c])
            _delete(keys, vals, mask, shift, old)
            items[c] = x
            freqs[c] += 1
            slot = -1 - _find(keys, vals, mask, shift, x)
            keys[slot] = x
            vals[slot] = c
            _sift_down(heap, hpos, items, freqs, 0, size)
    return size
