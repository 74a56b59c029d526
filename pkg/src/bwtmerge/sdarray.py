"""Elias-Fano ("sdarray") encoding of non-decreasing integer sequences.

Each value is split into ``low_bits`` low bits, stored verbatim in a packed
array, and a high part stored in unary in a bitvector: element ``i`` with high
part ``h`` sets bit ``h + i``. ``select`` on the ones recovers an element and
``select`` on the zeros finds the first element of a high-part bucket.
"""

from __future__ import annotations

import numpy as np

_SAMPLE = 64


def _pack_bits(positions: np.ndarray, nbits: int) -> np.ndarray:
    words = np.zeros((nbits + 63) // 64 + 1, dtype=np.uint64)
    if positions.size:
        np.bitwise_or.at(words, positions >> 6, np.left_shift(np.uint64(1), (positions & 63).astype(np.uint64)))
    return words


class SdArray:
    """Compressed monotone sequence with ``get`` (select) and ``rank_lt``."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.int64)
        if values.ndim != 1:
            raise ValueError("SdArray takes a one-dimensional sequence")
        if values.size and (values[0] < 0 or np.any(values[1:] < values[:-1])):
            raise ValueError("SdArray values must be non-negative and non-decreasing")
        self.size = int(values.size)
        universe = int(values[-1]) + 1 if self.size else 1
        self.low_bits = max(0, (universe // max(self.size, 1)).bit_length() - 1)
        lb = self.low_bits
        highs = values >> lb
        self.max_high = int(highs[-1]) if self.size else -1
        ones = highs + np.arange(self.size, dtype=np.int64)
        self._nbits = int(self.max_high + 1 + self.size)
        self._high = _pack_bits(ones, self._nbits)
        if lb:
            lows = (values & ((1 << lb) - 1)).astype(np.uint64)
            low_words = np.zeros((self.size * lb + 63) // 64 + 1, dtype=np.uint64)
            bitpos = np.arange(self.size, dtype=np.int64) * lb
            for k in range(lb):
                pos = bitpos + k
                bit = (lows >> np.uint64(k)) & np.uint64(1)
                sel = bit.astype(bool)
                np.bitwise_or.at(low_words, pos[sel] >> 6,
                                 np.left_shift(np.uint64(1), (pos[sel] & 63).astype(np.uint64)))
            self._low = low_words
        else:
            self._low = np.zeros(0, dtype=np.uint64)
        self._ones_sample = [int(p) for p in ones[::_SAMPLE]]
        zero_mask = np.ones(self._nbits, dtype=bool)
        zero_mask[ones] = False
        zeros = np.flatnonzero(zero_mask)
        self._zeros_sample = [int(p) for p in zeros[::_SAMPLE]]

    def __len__(self) -> int:
        return self.size

    def nbytes(self) -> int:
        words = self._high.size + self._low.size
        return 8 * (words + len(self._ones_sample) + len(self._zeros_sample))

    def _select(self, k: int, want_one: bool) -> int:
        samples = self._ones_sample if want_one else self._zeros_sample
        high = self._high
        start = samples[k // _SAMPLE]
        remaining = k % _SAMPLE
        w = start >> 6
        word = int(high[w]) if want_one else ~int(high[w]) & 0xFFFFFFFFFFFFFFFF
        word &= ~((1 << (start & 63)) - 1) & 0xFFFFFFFFFFFFFFFF
        while True:
            count = word.bit_count()
            if remaining < count:
                for _ in range(remaining):
                    word &= word - 1
                return (w << 6) + (word & -word).bit_length() - 1
            remaining -= count
            w += 1
            word = int(high[w]) if want_one else ~int(high[w]) & 0xFFFFFFFFFFFFFFFF

    def _low_value(self, i: int) -> int:
        lb = self.low_bits
        if not lb:
            return 0
        bit = i * lb
        w, off = bit >> 6, bit & 63
        value = int(self._low[w]) >> off
        if off + lb > 64:
            value |= int(self._low[w + 1]) << (64 - off)
        return value & ((1 << lb) - 1)

    def get(self, i: int) -> int:
        if not 0 <= i < self.size:
            raise IndexError(i)
        high = self._select(i, True) - i
        return (high << self.low_bits) | self._low_value(i)

    __getitem__ = get

    def rank_lt(self, x: int) -> int:
        """Number of elements strictly smaller than ``x``."""
        if x <= 0 or not self.size:
            return 0
        h = x >> self.low_bits
        if h > self.max_high:
            return self.size
        lo = self._select(h - 1, False) - (h - 1) if h else 0
        hi = self._select(h, False) - h
        while lo < hi:
            mid = (lo + hi) // 2
            if self.get(mid) < x:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def to_array(self) -> np.ndarray:
        bits = np.unpackbits(self._high.view(np.uint8), bitorder="little")
        ones = np.flatnonzero(bits)[: self.size].astype(np.int64)
        values = (ones - np.arange(self.size, dtype=np.int64)) << self.low_bits
        bitpos = np.arange(self.size, dtype=np.int64) * self.low_bits
        for k in range(self.low_bits):
            pos = bitpos + k
            bit = (self._low[pos >> 6] >> (pos & 63).astype(np.uint64)) & np.uint64(1)
            values |= bit.astype(np.int64) << k
        return values
