import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwtmerge.build import bwt_from_collection, suffix_array_oracle
from bwtmerge.errors import BoundsError, IncompatibleIndexError, InvalidPatternError
from bwtmerge.fmi import (LexRange, count, extract, extract_all, locate, sample_kmers, text_length,
                          verify_against)
from bwtmerge.merge import merge_collections
from bwtmerge.rlbwt import RunLengthBwt

from oracles import load_frozen, naive_count, random_reads

FROZEN = load_frozen()
reads_strategy = st.lists(st.text(alphabet="ACGTN", min_size=1, max_size=20), min_size=1, max_size=8)


@pytest.fixture
def example(backend, index_mode):
    return bwt_from_collection(["AC", "AG"], index_mode=index_mode)


def test_count_examples(example):
    assert count(example, "A") == LexRange(3, 4) and count(example, "A").count == 2
    assert count(example, "AC") == LexRange(3, 3) and count(example, "AC").count == 1
    assert count(example, "T").count == 0 and count(example, "T").empty
    assert count(example, "GA").count == 0


def test_count_errors(example):
    for bad in ["", "A$C", bytes([1, 0])]:
        with pytest.raises(InvalidPatternError):
            count(example, bad)


def test_locate_examples(example):
    assert locate(example, 5) == (1, 2)
    assert locate(example, 1) == (1, 3)
    assert locate(example, 2) == (2, 3)
    # row 4 is the suffix AG$2
    assert locate(example, 4) == (2, 1)
    with pytest.raises(BoundsError):
        locate(example, 7)


def test_extract_examples(example):
    assert extract(example, 1) == "AC"
    assert extract(example, 2) == "AG"
    with pytest.raises(BoundsError):
        extract(example, 3)
    with pytest.raises(BoundsError):
        extract(example, 0)
    assert text_length(example, 1) == 3


def test_frozen_counts(backend):
    for item in FROZEN["counts"]:
        bwt = bwt_from_collection(item["reads"])
        assert [count(bwt, p).count for p in item["patterns"]] == item["counts"]


@given(reads_strategy, st.lists(st.text(alphabet="ACGTN", min_size=1, max_size=6), max_size=20))
def test_count_matches_naive(backend, reads, patterns):
    bwt = bwt_from_collection(reads)
    for p in patterns + [r[:3] for r in reads]:
        assert count(bwt, p).count == naive_count(reads, p)


@given(reads_strategy)
def test_locate_and_extract_match_oracle(backend, reads):
    for mode in ("plain", "sdarray"):
        bwt = bwt_from_collection(reads, index_mode=mode)
        sa = suffix_array_oracle(reads)
        longest = max(len(r) for r in reads)
        for i in range(1, bwt.n + 1):
            text, offset = locate(bwt, i)
            assert (text, offset) == sa[i - 1]
            assert 1 <= offset <= len(reads[text - 1]) + 1
        # psi walk terminates within the longest read plus its endmarker
        for i in range(1, bwt.n + 1):
            steps, j = 0, i
            while j > bwt.m:
                j = bwt.psi(j)
                steps += 1
            assert steps <= longest + 1
        assert extract_all(bwt) == list(reads)


def test_extract_after_merge(backend):
    rng = random.Random(5)
    parts = [random_reads(rng, rng.randint(1, 10), 1, 30) for _ in range(3)]
    merged = merge_collections([bwt_from_collection(p) for p in parts])
    assert extract_all(merged) == [r for p in parts for r in p]


def test_verify_examples(backend):
    a, c = bwt_from_collection(["A"]), bwt_from_collection(["C"])
    merged = bwt_from_collection(["A", "C"])
    report = verify_against(merged, [a, c], ["A"])
    assert report.ok and report.checked == 1
    x = bwt_from_collection(["ACGTAC", "GGT"])
    assert verify_against(x, [x], sample_kmers(x, 20, 3, seed=1)).ok


def test_verify_detects_flipped_symbol(backend):
    reads = ["ACGTTGCA", "CCGTA"]
    good = bwt_from_collection(reads)
    symbols = good.symbols().copy()
    k = next(i for i, s in enumerate(symbols) if s not in (0, 1))
    symbols[k] = 1
    bad = RunLengthBwt.from_symbols(symbols)
    two_mers = [a + b for a in "ACGTN" for b in "ACGTN"]
    assert verify_against(bad, [good], two_mers).mismatches


def test_verify_incompatible(backend):
    with pytest.raises(IncompatibleIndexError):
        verify_against(bwt_from_collection(["A"]), [bwt_from_collection(["A"], alphabet="acgnt")], ["A"])


def test_sample_kmers(backend):
    bwt = bwt_from_collection(["ACGTACGTAC", "GG", "TTTTTTTT"])
    kmers = sample_kmers(bwt, 50, 5, seed=3)
    assert len(kmers) == 50 and all(len(k) == 5 for k in kmers)
    assert kmers == sample_kmers(bwt, 50, 5, seed=3)
    texts = extract_all(bwt)
    assert all(any(k in t for t in texts) for k in kmers)
    assert sample_kmers(bwt, 5, 50, seed=0) == []
