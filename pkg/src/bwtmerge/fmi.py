"""FM-index queries over a run-length BWT: counting, locating and extraction.

Locating uses no suffix-array samples. From row ``i`` it follows ``psi``
until it reaches an endmarker row ``j <= m``, which identifies the text;
the number of steps gives the offset. Read collections keep this walk short.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .codec import ENDMARKER, SIGMA
from .errors import BoundsError, IncompatibleIndexError, InvalidPatternError
from .rlbwt import RunLengthBwt


class LexRange(NamedTuple):
    sp: int
    ep: int

    @property
    def count(self) -> int:
        return max(0, self.ep + 1 - self.sp)

    @property
    def empty(self) -> bool:
        return self.ep < self.sp


def _pattern_symbols(bwt: RunLengthBwt, pattern) -> bytes:
    if isinstance(pattern, str):
        if "$" in pattern:
            raise InvalidPatternError("patterns cannot contain the endmarker")
        pattern = bwt.alphabet.encode(pattern)
    pattern = bytes(pattern)
    if not pattern:
        raise InvalidPatternError("pattern is empty")
    if ENDMARKER in pattern:
        raise InvalidPatternError("patterns cannot contain the endmarker")
    if max(pattern) >= SIGMA:
        raise InvalidPatternError("pattern symbol out of range")
    return pattern


def count(bwt: RunLengthBwt, pattern) -> LexRange:
    """Lexicographic range of the suffixes starting with ``pattern`` (backward search)."""
    pattern = _pattern_symbols(bwt, pattern)
    c_array = bwt.c_array
    c = pattern[-1]
    sp, ep = c_array[c] + 1, c_array[c + 1]
    for c in reversed(pattern[:-1]):
        if ep < sp:
            break
        sp = c_array[c] + bwt.rank(sp - 1, c) + 1
        ep = c_array[c] + bwt.rank(ep, c)
    if ep < sp:
        return LexRange(1, 0)
    return LexRange(sp, ep)


def text_length(bwt: RunLengthBwt, text_id: int) -> int:
    """Length of text ``text_id`` including its endmarker."""
    if not 1 <= text_id <= bwt.m:
        raise BoundsError(f"text id {text_id} outside [1, {bwt.m}]")
    i = text_id
    length = 1
    while bwt.access(i) != ENDMARKER:
        i = bwt.lf_step(i)
        length += 1
    return length


def locate(bwt: RunLengthBwt, i: int) -> tuple[int, int]:
    """``(text id, offset)`` of the suffix at row ``i``; offsets are 1-based."""
    if not 1 <= i <= bwt.n:
        raise BoundsError(f"position {i} outside [1, {bwt.n}]")
    steps = 0
    m = bwt.m
    while i > m:
        i = bwt.psi(i)
        steps += 1
    return i, text_length(bwt, i) - steps


def extract(bwt: RunLengthBwt, text_id: int) -> str:
    """Text ``text_id`` without its endmarker."""
    if not 1 <= text_id <= bwt.m:
        raise BoundsError(f"text id {text_id} outside [1, {bwt.m}]")
    out = bytearray()
    i = text_id
    while True:
        c = bwt.access(i)
        if c == ENDMARKER:
            break
        out.append(c)
        i = bwt.c_array[c] + bwt.rank(i, c)
    out.reverse()
    return bwt.alphabet.decode(out)


def extract_all(bwt: RunLengthBwt) -> list[str]:
    return [extract(bwt, j) for j in range(1, bwt.m + 1)]


def sample_kmers(bwt: RunLengthBwt, count_: int, length: int, seed: int = 0) -> list[str]:
    """Random ``length``-mers drawn from extracted texts (texts shorter than ``length`` are skipped)."""
    rng = random.Random(seed)
    if bwt.m == 0:
        return []
    texts: dict[int, str] = {}
    kmers: list[str] = []
    attempts = 0
    limit = max(100, 50 * count_)
    while len(kmers) < count_ and attempts < limit:
        attempts += 1
        j = rng.randint(1, bwt.m)
        if j not in texts:
            texts[j] = extract(bwt, j)
        text = texts[j]
        if len(text) < length:
            continue
        start = rng.randint(0, len(text) - length)
        kmers.append(text[start:start + length])
    return kmers


@dataclass
class VerifyReport:
    checked: int = 0
    mismatches: list[tuple[str, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_against(merged: RunLengthBwt, parts: Sequence[RunLengthBwt], kmers) -> VerifyReport:
    """Check that each k-mer occurs in ``merged`` as often as in all ``parts`` together.

    Mismatches are recorded as ``(kmer, merged count, summed count)``.
    """
    for part in parts:
        if part.alphabet.name != merged.alphabet.name:
            raise IncompatibleIndexError("alphabet orders differ")
    report = VerifyReport()
    for kmer in kmers:
        got = count(merged, kmer).count
        want = sum(count(p, kmer).count for p in parts)
        report.checked += 1
        if got != want:
            report.mismatches.append((kmer if isinstance(kmer, str) else merged.alphabet.decode(kmer), got, want))
    return report
