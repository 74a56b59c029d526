"""BWT construction for read collections.

``bwt_from_collection`` sorts the suffixes of the concatenated collection by
prefix doubling in numpy. Every endmarker gets a distinct sort value (text
``i`` ends in ``(0, i)``), so comparisons never run past the end of a read and
the concatenated order equals the generalized suffix order.
``suffix_array_oracle`` is an independent direct-comparison sort used by the
tests, and ``insert_text`` adds one read by repeated single-character
insertion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .codec import ACGTN, SIGMA, Alphabet, get_alphabet
from .errors import InvalidInputError
from .rlbwt import RunLengthBwt, symbols_to_runs


@dataclass
class ReadCollection:
    """Ordered reads as symbol byte strings (values 1..5, no endmarkers)."""

    reads: list[bytes] = field(default_factory=list)
    alphabet: Alphabet = ACGTN

    @classmethod
    def from_strings(cls, reads: Iterable[str | bytes], alphabet: Alphabet | str = ACGTN):
        alphabet = get_alphabet(alphabet)
        return cls([alphabet.encode(r) for r in reads], alphabet)

    def __len__(self) -> int:
        return len(self.reads)

    def __iter__(self):
        return iter(self.reads)

    def __getitem__(self, i):
        return self.reads[i]

    @property
    def total_length(self) -> int:
        """Sum of read lengths, endmarkers included."""
        return sum(len(r) + 1 for r in self.reads)

    def text(self, i: int) -> str:
        return self.alphabet.decode(self.reads[i])


def as_collection(collection, alphabet: Alphabet | str | None = None) -> ReadCollection:
    if isinstance(collection, ReadCollection):
        return collection
    alphabet = get_alphabet(alphabet or ACGTN)
    reads = []
    for r in collection:
        if isinstance(r, str):
            reads.append(alphabet.encode(r))
        else:
            r = bytes(r)
            if r and max(r) <= 5:
                reads.append(r)
            else:
                reads.append(alphabet.encode(r))
    return ReadCollection(reads, alphabet)


def _check_reads(reads: Sequence[bytes]) -> None:
    for i, r in enumerate(reads):
        if not r:
            raise InvalidInputError(f"read {i + 1} is empty")
        if 0 in r:
            raise InvalidInputError(f"read {i + 1} contains an endmarker")


def suffix_sort(reads: Sequence[bytes]) -> np.ndarray:
    """Suffix array of the concatenation ``T_1 $_1 T_2 $_2 ...`` (0-based starts)."""
    m = len(reads)
    concat = np.frombuffer(b"".join(r + b"\0" for r in reads), dtype=np.uint8)
    n = concat.size
    ends = np.flatnonzero(concat == 0)
    rank = concat.astype(np.int64) + m
    rank[ends] = np.arange(m, dtype=np.int64)
    del ends
    width = int(rank.max()) + 2
    h = 1
    while True:
        key = rank * width
        key[: n - h] += rank[h:] + 1
        sa = np.argsort(key, kind="stable")
        sorted_key = key[sa]
        del key
        fresh = np.empty(n, dtype=np.int64)
        flags = np.empty(n, dtype=np.int64)
        flags[0] = 0
        flags[1:] = sorted_key[1:] != sorted_key[:-1]
        del sorted_key
        np.cumsum(flags, out=flags)
        fresh[sa] = flags
        del flags
        rank = fresh
        if int(rank[sa[-1]]) == n - 1:
            return sa
        width = n + 1
        h *= 2


def bwt_symbols(collection) -> np.ndarray:
    """Uncompressed generalized BWT as a uint8 array of symbols."""
    collection = as_collection(collection)
    reads = collection.reads
    if not reads:
        raise InvalidInputError("cannot build the BWT of an empty collection")
    _check_reads(reads)
    concat = np.frombuffer(b"".join(r + b"\0" for r in reads), dtype=np.uint8)
    sa = suffix_sort(reads)
    # The character before the start of T_i is the endmarker of T_(i-1), i.e. 0,
    # which is also what the per-text rotation prescribes.
    return concat[sa - 1]


def bwt_from_collection(collection, alphabet: Alphabet | str | None = None,
                        index_mode: str = "plain") -> RunLengthBwt:
    collection = as_collection(collection, alphabet)
    syms, lens = symbols_to_runs(bwt_symbols(collection))
    return RunLengthBwt.from_run_arrays(syms, lens, collection.alphabet, index_mode)


def suffix_array_oracle(collection) -> list[tuple[int, int]]:
    """All suffixes as 1-based ``(text id, offset)`` in lexicographic order.

    Direct comparison sort; endmarker of text ``i`` compares as ``(0, i)``.
    """
    collection = as_collection(collection)
    reads = collection.reads
    if not reads:
        raise InvalidInputError("empty collection")
    _check_reads(reads)
    m = len(reads)
    suffixes = []
    for t, read in enumerate(reads):
        text = [m + s for s in read] + [t]
        for off in range(len(text)):
            suffixes.append((text[off:], t + 1, off + 1))
    suffixes.sort(key=lambda item: item[0])
    return [(t, off) for _, t, off in suffixes]


def oracle_bwt_symbols(collection) -> np.ndarray:
    """BWT derived from ``suffix_array_oracle`` (independent of ``bwt_symbols``)."""
    collection = as_collection(collection)
    reads = collection.reads
    out = []
    for t, off in suffix_array_oracle(collection):
        out.append(0 if off == 1 else reads[t - 1][off - 2])
    return np.array(out, dtype=np.uint8)


def insert_text(bwt: RunLengthBwt, text) -> RunLengthBwt:
    """Append ``text`` as text ``m + 1`` by single-character insertions.

    Starts from the new endmarker (rank ``m + 1``, after all existing
    endmarkers) and repeatedly replaces the endmarker standing for the
    partial text with the next character to the left, inserting a new
    endmarker at rank ``C[c] + rank(i, c)``.
    """
    if isinstance(text, str):
        text = bwt.alphabet.encode(text)
    text = bytes(text)
    if not text:
        raise InvalidInputError("cannot insert an empty text")
    if 0 in text or max(text) >= SIGMA:
        raise InvalidInputError("text symbols must be in 1..5")
    seq = bwt.symbols() if bwt.n else np.zeros(0, dtype=np.uint8)
    counts = np.bincount(seq, minlength=SIGMA).astype(np.int64)
    m = int(counts[0])
    # 0-based index of the row standing for the partial text's start
    i = m
    seq = np.insert(seq, i, 0)
    counts[0] += 1
    for c in reversed(text):
        before = int(counts[:c].sum())
        j = before + int(np.count_nonzero(seq[: i + 1] == c))
        seq[i] = c
        counts[c] += 1
        seq = np.insert(seq, j, 0)
        i = j
    syms, lens = symbols_to_runs(seq)
    return RunLengthBwt.from_run_arrays(syms, lens, bwt.alphabet, bwt.index_mode)
