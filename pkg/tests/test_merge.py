import os
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwtmerge.build import bwt_from_collection
from bwtmerge.errors import CorruptionError, IncompatibleIndexError, InvalidInputError
from bwtmerge.fmi import locate
from bwtmerge.io import serialize_index
from bwtmerge.merge import (MergeConfig, MergeStats, RankStream, interleave, merge_collections,
                            merge_pair, search_phase)
from bwtmerge.merge import buffers as buffers_module
from bwtmerge.merge.search import emitted_total
from bwtmerge.rlbwt import empty_bwt

from oracles import encode_symbols, load_frozen, random_reads, rank_array, rank_runs

FROZEN = load_frozen()
reads_strategy = st.lists(st.text(alphabet="ACGTN", min_size=1, max_size=12), min_size=1, max_size=6)
configs = st.builds(MergeConfig, run_buffer_pairs=st.integers(1, 8), thread_buffer_bytes=st.integers(1, 64),
                    merge_buffers=st.integers(1, 3), threads=st.integers(1, 3))


def search_runs(a, b, config, tmp_path):
    found = search_phase(a, b, config, tmp_path)
    return list(RankStream(found.residual + found.spill_files, expected_total=b.n)), found


def test_search_examples(backend, tmp_path):
    a, b = bwt_from_collection(["A"]), bwt_from_collection(["C"])
    runs, _ = search_runs(a, b, MergeConfig(threads=1), tmp_path)
    assert runs == [(1, 1), (2, 1)]
    a, b = bwt_from_collection(["AC"]), bwt_from_collection(["AG"])
    runs, _ = search_runs(a, b, MergeConfig(threads=1), tmp_path)
    # $2 -> 1, AG$2 -> 2, G$2 -> 3 (G$2 sorts after C$1)
    assert runs == [(1, 1), (2, 1), (3, 1)]
    assert runs == rank_runs(rank_array([encode_symbols("AC")], [encode_symbols("AG")]))


def test_search_incompatible(backend, tmp_path):
    with pytest.raises(IncompatibleIndexError):
        search_phase(bwt_from_collection(["A"]), bwt_from_collection(["C"], alphabet="acgnt"),
                     MergeConfig(), tmp_path)


def test_frozen_rank_arrays(backend, tmp_path):
    for item in FROZEN["rank_arrays"]:
        runs, _ = search_runs(bwt_from_collection(item["a"]), bwt_from_collection(item["b"]),
                              MergeConfig(threads=2, run_buffer_pairs=2, thread_buffer_bytes=4,
                                          merge_buffers=1), tmp_path)
        assert runs == [tuple(r) for r in item["runs"]]


@given(reads_strategy, reads_strategy, configs)
def test_rank_array_property(backend, tmp_path_factory, reads_a, reads_b, config):
    a, b = bwt_from_collection(reads_a), bwt_from_collection(reads_b)
    runs, found = search_runs(a, b, config, tmp_path_factory.mktemp("s"))
    ra = [h for h, l in runs for _ in range(l)]
    assert ra == sorted(ra)
    assert ra == rank_array([encode_symbols(r) for r in reads_a], [encode_symbols(r) for r in reads_b])


def test_conservation_after_search(backend, tmp_path):
    rng = random.Random(4)
    a = bwt_from_collection(random_reads(rng, 40, 5, 30))
    b = bwt_from_collection(random_reads(rng, 40, 5, 30))
    found = search_phase(a, b, MergeConfig(run_buffer_pairs=4, thread_buffer_bytes=16, merge_buffers=2,
                                           threads=2), tmp_path)
    assert found.spill_files
    assert emitted_total(found) == b.n


def test_interleave_examples(backend):
    a, b = bwt_from_collection(["A"]), bwt_from_collection(["C"])
    assert interleave(a, b, [(1, 1), (2, 1)]).to_text() == "AC$$"
    assert interleave(a, empty_bwt(), []) == a
    a, b = bwt_from_collection(["AC"]), bwt_from_collection(["AG"])
    assert interleave(a, b, [(1, 1), (2, 2)]).to_text() == "CG$$AA"
    assert interleave(a, b, [(1, 1), (2, 1), (3, 1)]).to_text() == "CG$$AA"


@pytest.mark.parametrize("stream", [[(1, 1)], [(1, 1), (2, 2)], [(1, 1), (5, 1)], [(2, 1), (1, 1)]])
def test_interleave_rejects_bad_streams(backend, stream):
    a, b = bwt_from_collection(["A"]), bwt_from_collection(["C"])
    with pytest.raises(CorruptionError):
        interleave(a, b, stream)


def test_merge_collections_examples(backend):
    assert merge_collections([bwt_from_collection(["A"]), bwt_from_collection(["C"])]).to_text() == "AC$$"
    ac, ag = bwt_from_collection(["AC"]), bwt_from_collection(["AG"])
    assert merge_collections([ac, ag, ac]) == bwt_from_collection(["AC", "AG", "AC"])
    with pytest.raises(InvalidInputError):
        merge_collections([ac])
    with pytest.raises(IncompatibleIndexError):
        merge_collections([ac, bwt_from_collection(["AG"], alphabet="acgnt")])


@given(st.lists(reads_strategy, min_size=2, max_size=4), configs)
def test_split_merge_equals_build(backend, parts, config):
    merged = merge_collections([bwt_from_collection(p) for p in parts], config)
    whole = bwt_from_collection([r for p in parts for r in p])
    assert merged == whole
    assert merged.counts == tuple(sum(x) for x in zip(*(bwt_from_collection(p).counts for p in parts)))


def test_sdarray_inputs(backend):
    a = bwt_from_collection(["ACGT", "GGA"], index_mode="sdarray")
    b = bwt_from_collection(["TTAC"], index_mode="sdarray")
    merged = merge_pair(a, b)
    assert merged.index_mode == "sdarray"
    assert merged == bwt_from_collection(["ACGT", "GGA", "TTAC"])


def test_determinism_across_threads_and_buffers(backend, tmp_path):
    rng = random.Random(21)
    parts = [random_reads(rng, 120, 20, 60, "ACGT") for _ in range(3)]
    inputs = [bwt_from_collection(p) for p in parts]
    reference = serialize_index(merge_collections(inputs, MergeConfig(threads=1, temp_dir=str(tmp_path))))
    for threads in (1, 2, 8):
        for rb, tb, k in [(1 << 20, 8 << 20, 6), (16, 64, 1), (3, 32, 2)]:
            stats = MergeStats()
            cfg = MergeConfig(run_buffer_pairs=rb, thread_buffer_bytes=tb, merge_buffers=k, threads=threads,
                              temp_dir=str(tmp_path))
            assert serialize_index(merge_collections(inputs, cfg, stats)) == reference
            if tb == 64:
                assert stats.spill_files > 0
    assert os.listdir(tmp_path) == []


def test_endmarker_order(backend):
    rng = random.Random(8)
    ra, rb = random_reads(rng, 7, 3, 9), random_reads(rng, 5, 3, 9)
    merged = merge_pair(bwt_from_collection(ra), bwt_from_collection(rb))
    m_a = len(ra)
    for i in range(1, merged.m + 1):
        text, offset = locate(merged, i)
        assert text == i
        assert offset == len((ra + rb)[i - 1]) + 1
        assert (text <= m_a) == (i <= m_a)


def test_unwritable_temp_dir(backend, tmp_path):
    a, b = bwt_from_collection(["ACG"]), bwt_from_collection(["CGT"])
    with pytest.raises(OSError):
        merge_pair(a, b, MergeConfig(temp_dir=str(tmp_path / "does-not-exist")))


def test_spill_failure_cleans_up(backend, tmp_path, monkeypatch):
    def failing(path, buffer):
        open(path, "wb").close()
        raise OSError(28, "No space left on device")

    monkeypatch.setattr(buffers_module, "write_spill_file", failing)
    rng = random.Random(2)
    a = bwt_from_collection(random_reads(rng, 30, 10, 20))
    b = bwt_from_collection(random_reads(rng, 30, 10, 20))
    cfg = MergeConfig(run_buffer_pairs=2, thread_buffer_bytes=8, merge_buffers=1, threads=2,
                      temp_dir=str(tmp_path))
    with pytest.raises(OSError):
        merge_pair(a, b, cfg)
    assert os.listdir(tmp_path) == []


def test_merge_stats(backend, tmp_path):
    rng = random.Random(12)
    a = bwt_from_collection(random_reads(rng, 50, 10, 40))
    b = bwt_from_collection(random_reads(rng, 50, 10, 40))
    stats = MergeStats()
    cfg = MergeConfig(run_buffer_pairs=8, thread_buffer_bytes=32, merge_buffers=2, temp_dir=str(tmp_path))
    merge_pair(a, b, cfg, stats)
    assert stats.merges == 1
    assert stats.spill_files > 0 and stats.peak_temp_bytes == stats.spill_bytes > 0
    assert stats.search_seconds >= 0 and stats.interleave_seconds >= 0
    assert stats.thread_buffers >= stats.spill_files * 4


def test_config_validation():
    with pytest.raises(ValueError):
        MergeConfig(merge_buffers=0)
    with pytest.raises(ValueError):
        MergeConfig(run_buffer_pairs=-1)
    cfg = MergeConfig()
    assert (cfg.run_buffer_pairs, cfg.thread_buffer_bytes, cfg.merge_buffers) == (1 << 20, 8 << 20, 6)
    assert cfg.threads >= 1 and cfg.verify_kmer_count == 10_000 and cfg.verify_kmer_length == 32


def test_long_runs_merge(backend):
    reads_a = ["C" * 3000 + "A" * 5000]
    a = bwt_from_collection(reads_a)
    b = bwt_from_collection(["A" * 4000, "C" * 10])
    assert merge_pair(a, b) == bwt_from_collection(reads_a + ["A" * 4000, "C" * 10])
    assert np.array_equal(merge_pair(b, a).symbols(),
                          bwt_from_collection(["A" * 4000, "C" * 10] + reads_a).symbols())
