import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacesaving import (
    ConfigurationError,
    InvalidCapacityError,
    InvalidWorkersError,
    RunConfig,
    StreamSummary,
    decompose,
    exact_count,
    prune_threshold,
    run,
    run_hybrid,
    run_parallel,
)
from spacesaving.datagen import ZipfSpec, generate_zipf, write_binary, read_stream
from spacesaving.engine import balanced_reduce, serialize_candidates
from spacesaving.merge import Partial, combine_partials

from conftest import brute_counts


def test_decompose_examples():
    assert decompose(10, 3).ranges == ((0, 2), (3, 5), (6, 9))
    assert decompose(10, 1).ranges == ((0, 9),)


def test_decompose_more_workers_than_items():
    # floor formulas evaluated by hand for r = 0..4:
    # (0, 0-1), (0, 1-1), (1, 1-1), (1, 2-1), (2, 3-1)
    d = decompose(3, 5)
    assert d.ranges == ((0, -1), (0, 0), (1, 0), (1, 1), (2, 2))
    assert d.lengths() == [0, 1, 0, 1, 1]


def test_decompose_zero_workers():
    with pytest.raises(InvalidWorkersError):
        decompose(10, 0)


def test_decompose_tiling_exhaustive():
    for n in range(0, 1001):
        for p in range(1, 65):
            ranges = decompose(n, p).ranges
            nxt = 0
            for left, right in ranges:
                length = right - left + 1
                assert length in (n // p, -(-n // p))
                if length:
                    assert left == nxt
                    nxt = right + 1
            assert nxt == n


def test_config_validation():
    with pytest.raises(InvalidWorkersError):
        RunConfig(k=3, workers=0)
    with pytest.raises(InvalidCapacityError):
        RunConfig(k=0)
    with pytest.raises(ConfigurationError):
        RunConfig(k=3, workers=4, hybrid=(3, 2))
    assert RunConfig(k=3, workers=6, hybrid=(3, 2)).mode == "hybrid:3x2"


def test_mode_dispatch_guards(oracle60):
    with pytest.raises(ConfigurationError):
        run_parallel(oracle60, RunConfig(k=3, workers=2, hybrid=(2, 1)))
    with pytest.raises(ConfigurationError):
        run_hybrid(oracle60, RunConfig(k=3, workers=2))
    with pytest.raises(ConfigurationError):
        run(oracle60, RunConfig(k=3, n=61))


def test_single_worker_is_sequential(rng):
    data = generate_zipf(ZipfSpec(universe=500, skew=1.1, length=20000, seed=3))
    out = run_parallel(data, RunConfig(k=50, workers=1))
    s = StreamSummary(50).extend(data)
    assert out.candidates == prune_threshold(s, data.size, 50)
    assert out.root_summary() == s


@pytest.mark.parametrize("workers", [1, 2, 3, 4])
def test_recall_oracle60(oracle60, workers):
    truth = brute_counts(oracle60)
    res = run_parallel(oracle60, RunConfig(k=3, workers=workers))
    reported = {c.item for c in res.candidates}
    assert {x for x, f in truth.items() if f > 60 / 3} <= reported
    assert 1 in reported


def test_deterministic_output(rng):
    data = generate_zipf(ZipfSpec(universe=10_000, skew=1.1, length=100_000, seed=9))
    cfg = RunConfig(k=100, workers=4)
    assert serialize_candidates(run(data, cfg).candidates) == serialize_candidates(run(data, cfg).candidates)


def test_hybrid_single_process_equals_flat():
    data = generate_zipf(ZipfSpec(universe=1000, skew=1.1, length=30011, seed=1))
    for t in (1, 2, 3, 5, 8):
        flat = run_parallel(data, RunConfig(k=40, workers=t))
        hyb = run_hybrid(data, RunConfig(k=40, workers=t, hybrid=(1, t)))
        assert hyb.candidates == flat.candidates
        assert hyb.root_summary() == flat.root_summary()


def test_hybrid_single_thread_equals_flat():
    data = generate_zipf(ZipfSpec(universe=1000, skew=1.1, length=30011, seed=2))
    for p in (1, 2, 3, 5, 8):
        flat = run_parallel(data, RunConfig(k=40, workers=p))
        hyb = run_hybrid(data, RunConfig(k=40, workers=p, hybrid=(p, 1)))
        assert hyb.root_summary() == flat.root_summary()


@pytest.mark.parametrize("layout", [(1, 1), (1, 4), (2, 2), (4, 1), (2, 3), (3, 2), (5, 4)])
def test_hybrid_recall_oracle60(oracle60, layout):
    p, t = layout
    res = run_hybrid(oracle60, RunConfig(k=3, workers=p * t, hybrid=layout))
    truth = exact_count(oracle60)
    assert truth.frequent(3) <= {c.item for c in res.candidates}


def test_empty_blocks(oracle60):
    short = oracle60[:3]
    res = run_parallel(short, RunConfig(k=2, workers=5))
    seq = prune_threshold(StreamSummary(2).extend(short), 3, 2)
    assert {c.item for c in seq} <= {c.item for c in res.candidates}
    assert run_parallel(np.zeros(0, dtype=np.uint64), RunConfig(k=2, workers=3)).candidates == []


def test_memory_mapped_input(tmp_path):
    data = generate_zipf(ZipfSpec(universe=100, skew=1.3, length=5000, seed=4))
    path = tmp_path / "s.bin"
    write_binary(path, data)
    mm = read_stream(path)
    cfg = RunConfig(k=10, workers=3)
    assert run(mm, cfg).candidates == run(data, cfg).candidates


def test_timing_breakdown(oracle60):
    res = run(np.tile(oracle60, 1000), RunConfig(k=3, workers=4))
    tm = res.timing
    assert len(tm.worker_compute) == 4
    assert tm.wall >= tm.compute_max >= 0
    assert tm.overhead == pytest.approx(tm.wall - tm.compute_max)
    assert tm.reduction >= 0


def test_balanced_reduce_order():
    assert balanced_reduce(list("abcde"), lambda x, y: f"({x}{y})") == "(((ab)(cd))e)"
    assert balanced_reduce(["a"], lambda x, y: x + y) == "a"
    with pytest.raises(ValueError):
        balanced_reduce([], lambda x, y: x)


def tree_shapes(leaves):
    """Every full binary tree over the ordered leaves."""
    if len(leaves) == 1:
        yield leaves[0]
        return
    for i in range(1, len(leaves)):
        for left in tree_shapes(leaves[:i]):
            for right in tree_shapes(leaves[i:]):
                yield (left, right)


def fold(tree, leaves, op):
    if isinstance(tree, tuple):
        return op(fold(tree[0], leaves, op), fold(tree[1], leaves, op))
    return leaves[tree]


def test_reduction_order_robustness(rng):
    """Any tree shape and any leaf order over <= 4 block summaries keeps recall 1."""
    for trial in range(40):
        n = int(rng.integers(20, 120))
        k = int(rng.integers(2, 5))
        data = rng.choice(np.arange(1, 9, dtype=np.uint64), size=n, p=[0.35, 0.2, 0.15, 0.1, 0.08, 0.06, 0.04, 0.02])
        truth = exact_count(data).frequent(k)
        for p in (1, 2, 3, 4):
            leaves = []
            for left, right in decompose(n, p).ranges:
                s = StreamSummary(k).extend(data[left : right + 1])
                leaves.append(Partial.from_summary(s))
            for perm in itertools.permutations(range(p)):
                for tree in tree_shapes(list(perm)):
                    root = fold(tree, leaves, lambda a, b: combine_partials(a, b, k))
                    assert truth <= {c.item for c in prune_threshold(root, n, k)}


@given(st.lists(st.integers(0, 9), min_size=1, max_size=200), st.integers(2, 5), st.integers(1, 9))
def test_recall_independent_of_worker_count(stream, k, workers):
    data = np.array(stream, dtype=np.uint64)
    res = run(data, RunConfig(k=k, workers=workers))
    assert exact_count(data).frequent(k) <= {c.item for c in res.candidates}
