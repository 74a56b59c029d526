import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwtmerge.codec import Run, decode_run
from bwtmerge.errors import BoundsError, CorruptionError, UnsupportedSymbolError
from bwtmerge.rlbwt import BLOCK_SIZE, RunLengthBwt, empty_bwt

from oracles import c_array, naive_rank, naive_select

EXAMPLE = "CG$$AA"


@pytest.fixture
def example(backend, index_mode):
    return RunLengthBwt.from_text(EXAMPLE, index_mode=index_mode)


def test_from_runs_examples(backend):
    empty = RunLengthBwt.from_runs([])
    assert empty.n == 0 and empty.m == 0 and list(empty.run_iterator()) == []
    bwt = RunLengthBwt.from_runs([(2, 1), (3, 1), (0, 2), (1, 2)])
    assert bwt.to_text() == EXAMPLE
    assert (bwt.n, bwt.m, bwt.counts) == (6, 2, (2, 2, 1, 1, 0, 0))
    assert list(RunLengthBwt.from_runs([(1, 1), (1, 2)]).run_iterator()) == [Run(1, 3)]


def test_from_runs_rejects_bad_runs(backend):
    with pytest.raises(ValueError):
        RunLengthBwt.from_runs([(1, 0)])
    with pytest.raises(ValueError):
        RunLengthBwt.from_runs([(6, 1)])


def test_example_queries(example):
    b = example
    assert [b.access(i) for i in range(1, 7)] == [2, 3, 0, 0, 1, 1]
    assert b.access(1) == 2 and b.access(4) == 0
    assert b.rank(4, 0) == 2 and b.rank(6, 1) == 2
    assert all(b.rank(0, c) == 0 for c in range(6))
    assert b.select(1, 1) == 5 and b.select(2, 0) == 4
    assert b.lf(4, 1) == 2 and b.lf(5, 1) == 3
    assert all(b.lf(0, c) == b.c_array[c] for c in range(1, 6))
    assert b.lf_step(1) == 5 and b.lf_step(5) == 3
    assert b.psi(3) == 5 and b.psi(5) == 1 and b.psi(1) == 3
    assert list(b.run_iterator()) == [Run(2, 1), Run(3, 1), Run(0, 2), Run(1, 2)]
    assert b.c_array == (0, 2, 4, 5, 6, 6, 6)


def test_example_errors(example):
    b = example
    with pytest.raises(BoundsError):
        b.access(7)
    with pytest.raises(BoundsError):
        b.access(0)
    with pytest.raises(BoundsError):
        b.rank(7, 1)
    with pytest.raises(BoundsError):
        b.select(3, 0)
    with pytest.raises(BoundsError):
        b.psi(0)
    with pytest.raises(UnsupportedSymbolError):
        b.lf(3, 0)
    with pytest.raises(UnsupportedSymbolError):
        b.lf_step(3)


def test_single_run(backend):
    assert list(RunLengthBwt.from_text("AAAA").run_iterator()) == [Run(1, 4)]
    assert list(empty_bwt().run_iterator()) == []


def runs_strategy(max_len=200):
    return st.lists(st.tuples(st.integers(0, 5), st.integers(1, max_len)), min_size=1, max_size=60)


def expand(runs):
    return [s for s, l in runs for _ in range(l)]


def check_against_naive(bwt, seq):
    n = len(seq)
    assert bwt.n == n
    assert bwt.symbols().tolist() == seq
    cs = c_array(seq)
    assert list(bwt.c_array) == cs
    for i in range(0, n + 1):
        assert bwt.rank_all(i) == [naive_rank(seq, i, c) for c in range(6)]
    for i in range(1, n + 1):
        c = seq[i - 1]
        assert bwt.access(i) == c
        if c:
            assert bwt.lf_step(i) == cs[c] + naive_rank(seq, i, c)
        d = max(x for x in range(6) if cs[x] < i)
        assert bwt.psi(i) == naive_select(seq, i - cs[d], d)
    for c in range(6):
        for j in range(1, bwt.counts[c] + 1):
            assert bwt.select(j, c) == naive_select(seq, j, c)


@given(runs=runs_strategy(30))
def test_queries_match_naive(backend, runs):
    seq = expand(runs)
    for mode in ("plain", "sdarray"):
        check_against_naive(RunLengthBwt.from_symbols(seq, index_mode=mode), seq)


@given(runs=runs_strategy(30))
def test_vectorized_queries_match_point_queries(backend, runs):
    seq = expand(runs)
    n = len(seq)
    for mode in ("plain", "sdarray"):
        b = RunLengthBwt.from_symbols(seq, index_mode=mode)
        pos = np.arange(1, n + 1)
        assert b.access_many(pos).tolist() == seq
        assert b.rank_all_many(np.arange(n + 1)).tolist() == [b.rank_all(i) for i in range(n + 1)]
        assert b.psi_many(pos).tolist() == [b.psi(i) for i in range(1, n + 1)]
        live = [i for i in range(1, n + 1) if seq[i - 1]]
        assert b.lf_step_many(live).tolist() == [b.lf_step(i) for i in live]
        for c in range(6):
            js = np.arange(1, b.counts[c] + 1)
            assert b.select_many(js, c).tolist() == [b.select(int(j), c) for j in js]
    with pytest.raises(BoundsError):
        b.access_many([0])


@given(runs=runs_strategy(10**9))
def test_long_runs(backend, runs):
    bwt = RunLengthBwt.from_runs(runs)
    merged = []
    for s, l in runs:
        if merged and merged[-1][0] == s:
            merged[-1][1] += l
        else:
            merged.append([s, l])
    assert [tuple(r) for r in bwt.run_iterator()] == [tuple(r) for r in merged]
    n = sum(l for _, l in runs)
    assert bwt.n == n
    prefix = 0
    for s, l in merged:
        assert bwt.access(prefix + 1) == s and bwt.access(prefix + l) == s
        assert bwt.rank(prefix + l, s) - bwt.rank(prefix, s) == l
        prefix += l
    for c in range(6):
        if bwt.counts[c]:
            assert bwt.rank(bwt.select(bwt.counts[c], c), c) == bwt.counts[c]
    bwt.validate()


@given(runs=runs_strategy(500))
def test_structural_invariants(backend, runs):
    bwt = RunLengthBwt.from_runs(runs)
    offsets, ranks = bwt.plain_index()
    assert len(bwt.blocks) == BLOCK_SIZE * bwt.block_count
    assert np.array_equal(ranks.sum(axis=1), offsets)
    assert np.all(np.diff(offsets) > 0)
    assert sum(bwt.counts) == bwt.n
    assert bwt.m == bwt.counts[0]
    assert all(bwt.rank(bwt.n, c) == bwt.counts[c] for c in range(6))
    bounds = list(offsets) + [bwt.n]
    for b in range(bwt.block_count):
        # every block decodes on its own: runs never straddle a boundary
        data = bwt.blocks[b * BLOCK_SIZE:(b + 1) * BLOCK_SIZE]
        pos, done, prev = 0, 0, -1
        while done < bounds[b + 1] - bounds[b]:
            (s, l), used = decode_run(data, pos)
            assert s != prev
            prev = s
            pos += used
            done += l
        assert pos <= BLOCK_SIZE
        assert done == bounds[b + 1] - bounds[b]
    # canonical form
    again = RunLengthBwt.from_runs(bwt.run_iterator())
    assert again.blocks == bwt.blocks


@given(runs=runs_strategy(50))
def test_rank_select_inversion_and_lf_bijection(backend, runs):
    bwt = RunLengthBwt.from_symbols(expand(runs))
    for c in range(6):
        for j in range(1, bwt.counts[c] + 1):
            p = bwt.select(j, c)
            assert bwt.rank(p, c) == j and bwt.access(p) == c
    image = set()
    for i in range(1, bwt.n + 1):
        if bwt.access(i):
            j = bwt.lf_step(i)
            image.add(j)
            assert bwt.psi(j) == i
    assert len(image) == bwt.n - bwt.m


def test_rank_all_consistent_with_rank(backend):
    rng = np.random.default_rng(5)
    seq = np.repeat(rng.integers(0, 6, 500), rng.integers(1, 60, 500))
    bwt = RunLengthBwt.from_symbols(seq)
    for i in rng.integers(0, bwt.n + 1, 300):
        assert bwt.rank_all(int(i)) == [bwt.rank(int(i), c) for c in range(6)]


def test_index_modes_agree(backend):
    rng = np.random.default_rng(9)
    seq = np.repeat(rng.integers(0, 6, 3000), rng.integers(1, 100, 3000))
    plain = RunLengthBwt.from_symbols(seq)
    sd = plain.with_index_mode("sdarray")
    assert sd == plain
    assert sd.index_nbytes() < plain.index_nbytes()
    for i in rng.integers(1, plain.n + 1, 500):
        i = int(i)
        assert sd.access(i) == plain.access(i)
        assert sd.rank_all(i) == plain.rank_all(i)
        assert sd.psi(i) == plain.psi(i)


def test_validate_detects_corruption(backend):
    rng = np.random.default_rng(2)
    seq = np.repeat(rng.integers(0, 6, 400), rng.integers(1, 30, 400))
    bwt = RunLengthBwt.from_symbols(seq)
    bwt.validate()
    offsets, ranks = bwt.plain_index()
    blocks = bytearray(bwt.blocks)
    blocks[0] = (blocks[0] + 1) % 246
    bad = RunLengthBwt(bytes(blocks), offsets, ranks, bwt.counts)
    with pytest.raises(CorruptionError):
        bad.validate()
    with pytest.raises(CorruptionError):
        RunLengthBwt(bwt.blocks[:-BLOCK_SIZE], offsets, ranks, bwt.counts)


def test_equality_and_repr(backend):
    a = RunLengthBwt.from_text(EXAMPLE)
    assert a == RunLengthBwt.from_runs([(2, 1), (3, 1), (0, 2), (1, 2)])
    assert a != RunLengthBwt.from_text("CG$$AC")
    assert a != RunLengthBwt.from_text(EXAMPLE, "acgnt")
    assert "n=6" in repr(a)
