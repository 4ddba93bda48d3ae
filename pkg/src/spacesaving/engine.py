"""Data-parallel Space Saving driver.

The input array is split into contiguous blocks, one per worker. Each worker
runs sequential Space Saving on its block in its own thread (the compiled
kernel releases the GIL), the local summaries are merged pairwise in a fixed
balanced tree ordered by rank, and the root is filtered with
:func:`~spacesaving.merge.prune_threshold`.

Hybrid mode emulates a two-level process/thread layout inside one process:
the array is first split among ``P`` simulated processes, each block again
among ``T`` threads; each process reduces its own ``T`` summaries, then the
``P`` process summaries are reduced.
"""

from __future__ import annotations

import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import ConfigurationError, InvalidCapacityError, InvalidWorkersError
from .merge import Partial, combine_partials, prune_threshold
from .summary import ITEM_DTYPE, Counter, StreamSummary, space_saving

T = TypeVar("T")


@dataclass(frozen=True)
class Decomposition:
    """Inclusive ``(left, right)`` index ranges, one per rank.

    A rank with ``right < left`` owns an empty block.
    """

    n: int
    p: int
    ranges: tuple[tuple[int, int], ...]

    def lengths(self) -> list[int]:
        return [right - left + 1 for left, right in self.ranges]


def decompose(n: int, p: int) -> Decomposition:
    """Static block distribution of ``n`` indices over ``p`` ranks.

    Rank ``r`` gets ``[r*n//p, (r+1)*n//p - 1]``; every block has
    ``n // p`` or ``ceil(n / p)`` elements.
    """
    if p < 1:
        raise InvalidWorkersError(f"worker count must be >= 1, got {p}")
    if n < 0:
        raise ValueError(f"stream length must be >= 0, got {n}")
    ranges = tuple((r * n // p, (r + 1) * n // p - 1) for r in range(p))
    return Decomposition(n, p, ranges)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one engine run.

    Args:
        k: counters per summary.
        workers: total worker count ``p``.
        hybrid: optional ``(processes, threads_per_process)``; their product
            must equal ``workers``.
        n: expected stream length, checked against the input when given.
    """

    k: int
    workers: int = 1
    hybrid: tuple[int, int] | None = None
    n: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidCapacityError(f"capacity must be >= 1, got {self.k}")
        if self.workers < 1:
            raise InvalidWorkersError(f"worker count must be >= 1, got {self.workers}")
        if self.hybrid is not None:
            procs, threads = self.hybrid
            if procs < 1 or threads < 1:
                raise InvalidWorkersError(f"hybrid layout {procs}x{threads} has an empty level")
            if procs * threads != self.workers:
                raise ConfigurationError(
                    f"hybrid layout {procs}x{threads} does not match workers={self.workers}"
                )

    @property
    def mode(self) -> str:
        if self.hybrid is None:
            return "flat"
        return f"hybrid:{self.hybrid[0]}x{self.hybrid[1]}"


@dataclass
class TimingBreakdown:
    """Where the time of one run went.

    ``worker_compute`` holds the CPU time each worker thread spent in its
    local Space Saving pass. Everything else in ``wall`` (thread start-up,
    waiting, the reduction, the final prune) counts as overhead.
    """

    worker_compute: list[float]
    reduction: float
    wall: float

    @property
    def compute_max(self) -> float:
        return max(self.worker_compute, default=0.0)

    @property
    def overhead(self) -> float:
        return max(self.wall - self.compute_max, 0.0)


@dataclass
class RunResult:
    candidates: list[Counter]
    root: Partial
    config: RunConfig
    timing: TimingBreakdown = field(repr=False)

    def root_summary(self) -> StreamSummary:
        return self.root.to_summary()


def balanced_reduce(parts: Sequence[T], op: Callable[[T, T], T], pool: Executor | None = None) -> T:
    """Fold ``parts`` pairwise: (0,1), (2,3), ... then recurse on the results.

    An odd element at the end of a level is carried up unchanged. Pairs on the
    same level are independent and run on ``pool`` when one is given.
    """
    if not parts:
        raise ValueError("nothing to reduce")
    level = list(parts)
    while len(level) > 1:
        pairs = [(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if pool is not None and len(pairs) > 1:
            merged = list(pool.map(lambda ab: op(*ab), pairs))
        else:
            merged = [op(a, b) for a, b in pairs]
        if len(level) % 2:
            merged.append(level[-1])
        level = merged
    return level[0]


def as_stream(stream) -> np.ndarray:
    """View ``stream`` as a contiguous 1-d array of uint64 ids."""
    data = np.asarray(stream)
    if data.dtype != ITEM_DTYPE:
        data = data.astype(ITEM_DTYPE)
    return np.ascontiguousarray(data.reshape(-1))


def _local_pass(data: np.ndarray, left: int, right: int, k: int) -> tuple[Partial, float]:
    t0 = time.thread_time()
    items, freqs = space_saving(data, k, left, right + 1)
    elapsed = time.thread_time() - t0
    return Partial(items, freqs, max(right - left + 1, 0), k), elapsed


def _leaf_ranges(n: int, cfg: RunConfig) -> list[list[tuple[int, int]]]:
    """Block ranges grouped by (simulated) process."""
    if cfg.hybrid is None:
        return [list(decompose(n, cfg.workers).ranges)]
    procs, threads = cfg.hybrid
    groups = []
    for left, right in decompose(n, procs).ranges:
        sub = decompose(max(right - left + 1, 0), threads)
        groups.append([(left + lo, left + hi) for lo, hi in sub.ranges])
    return groups


def run(stream, cfg: RunConfig) -> RunResult:
    """Run the engine in flat or hybrid mode according to ``cfg``."""
    data = as_stream(stream)
    n = data.size
    if cfg.n is not None and cfg.n != n:
        raise ConfigurationError(f"config expects n={cfg.n}, stream has {n} items")
    k = cfg.k

    def op(a: Partial, b: Partial) -> Partial:
        return combine_partials(a, b, k)

    groups = _leaf_ranges(n, cfg)
    flat = [rng for group in groups for rng in group]

    t_start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=len(flat)) as pool:
        futures = [pool.submit(_local_pass, data, left, right, k) for left, right in flat]
        outs = [f.result() for f in futures]
        t_reduce = time.perf_counter()
        partials = [p for p, _ in outs]
        if cfg.hybrid is None:
            root = balanced_reduce(partials, op, pool)
        else:
            per_proc, start = [], 0
            for group in groups:
                per_proc.append(partials[start : start + len(group)])
                start += len(group)
            proc_roots = list(pool.map(lambda ps: balanced_reduce(ps, op), per_proc))
            root = balanced_reduce(proc_roots, op, pool)
        reduction = time.perf_counter() - t_reduce
    candidates = prune_threshold(root, n, k)
    wall = time.perf_counter() - t_start

    timing = TimingBreakdown([t for _, t in outs], reduction, wall)
    return RunResult(candidates, root, cfg, timing)


def run_parallel(stream, cfg: RunConfig) -> RunResult:
    """Flat mode: one block per worker, one reduction tree over all ranks."""
    if cfg.hybrid is not None:
        raise ConfigurationError("run_parallel takes a flat config; use run_hybrid")
    return run(stream, cfg)


def run_hybrid(stream, cfg: RunConfig) -> RunResult:
    """Two-level mode; ``cfg.hybrid`` must be set."""
    if cfg.hybrid is None:
        raise ConfigurationError("run_hybrid needs cfg.hybrid=(processes, threads)")
    return run(stream, cfg)


def serialize_candidates(candidates: Sequence[Counter]) -> bytes:
    """Canonical byte form of a candidate list, used for determinism checks."""
    lines = ["item,est_freq"] + [f"{c.item},{c.est_freq}" for c in candidates]
    return ("\n".join(lines) + "\n").encode()
