import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwtmerge.build import (ReadCollection, bwt_from_collection, bwt_symbols, insert_text,
                            oracle_bwt_symbols, suffix_array_oracle)
from bwtmerge.codec import ACGNT
from bwtmerge.errors import InvalidInputError
from bwtmerge.rlbwt import empty_bwt

from oracles import encode_symbols, load_frozen, naive_bwt, naive_sa, random_reads

FROZEN = load_frozen()

reads_strategy = st.lists(st.text(alphabet="ACGTN", min_size=1, max_size=15), min_size=1, max_size=12)


@pytest.mark.parametrize("reads,expected", [
    (["ACGT"], "T$ACG"), (["AC", "AG"], "CG$$AA"), (["A"], "A$"),
])
def test_build_examples(backend, reads, expected):
    assert bwt_from_collection(reads).to_text() == expected


def test_oracle_examples():
    assert suffix_array_oracle(["AC", "AG"]) == [(1, 3), (2, 3), (1, 1), (2, 1), (1, 2), (2, 2)]
    assert suffix_array_oracle(["A"]) == [(1, 2), (1, 1)]
    sa = suffix_array_oracle(["AA", "AA"])
    # at every tie the suffix of text 1 comes first
    for k in range(0, len(sa), 2):
        assert sa[k][0] == 1 and sa[k + 1][0] == 2 and sa[k][1] == sa[k + 1][1]


def test_build_errors(backend):
    with pytest.raises(InvalidInputError):
        bwt_from_collection([])
    with pytest.raises(InvalidInputError):
        bwt_from_collection(["AC", ""])


def test_frozen_collections(backend):
    for item in FROZEN["collections"]:
        assert bwt_from_collection(item["reads"]).to_text() == item["bwt"]
        assert [tuple(x) for x in item["sa"]] == suffix_array_oracle(item["reads"])


@given(reads_strategy)
def test_matches_independent_oracle(reads):
    enc = [encode_symbols(r) for r in reads]
    expected = naive_bwt(enc)
    assert bwt_symbols(reads).tolist() == expected
    assert oracle_bwt_symbols(reads).tolist() == expected
    assert suffix_array_oracle(reads) == naive_sa(enc)


def test_oracle_identity_many_collections():
    rng = random.Random(11)
    for _ in range(1000):
        reads = random_reads(rng, rng.randint(1, 100), 1, 50)
        if rng.random() < 0.7:
            reads = reads[: rng.randint(1, 15)]
        assert np.array_equal(bwt_symbols(reads), oracle_bwt_symbols(reads))


@given(reads_strategy)
def test_counting_identity(backend, reads):
    bwt = bwt_from_collection(reads)
    assert bwt.m == len(reads)
    assert bwt.n == sum(len(r) + 1 for r in reads)


@given(reads_strategy)
def test_fold_identity(backend, reads):
    bwt = empty_bwt()
    for r in reads:
        bwt = insert_text(bwt, r)
    assert bwt == bwt_from_collection(reads)


def test_insert_examples(backend):
    assert insert_text(bwt_from_collection(["A"]), "C").to_text() == "AC$$"
    assert insert_text(bwt_from_collection(["AC"]), "AG").to_text() == "CG$$AA"
    assert insert_text(empty_bwt(), "A").to_text() == "A$"
    with pytest.raises(InvalidInputError):
        insert_text(empty_bwt(), "")


def test_alternate_alphabet_order(backend):
    bwt = bwt_from_collection(["ACGTN"], alphabet="acgnt")
    assert bwt.alphabet is ACGNT
    assert bwt.to_text() == "N$ACTG"
    coll = ReadCollection.from_strings(["acgt", "nnx"])
    assert coll.text(1) == "NNN" and coll.total_length == 9


def test_repetitive_input_terminates(backend):
    reads = ["A" * 300] * 20 + ["AC" * 150] * 5
    assert np.array_equal(bwt_symbols(reads), oracle_bwt_symbols(reads))
