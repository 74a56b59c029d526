"""Run-length encoded BWT with a block-level rank/select index.

Runs are byte-coded (see :mod:`bwtmerge.codec`) into 64-byte blocks; no run
code crosses a block boundary. For each block the index stores the number of
symbols before it and the per-symbol ranks at its start. Positions are
1-based throughout, as in ``rank(i, c)`` counting ``c`` in ``BWT[1..i]``.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Iterable, Iterator

import numpy as np

from . import _backend
from ._pykernels import _block_runs
from .codec import ACGTN, SIGMA, Alphabet, Run, get_alphabet
from .errors import BoundsError, CorruptionError, UnsupportedSymbolError
from .sdarray import SdArray

BLOCK_SIZE = 64
INDEX_MODES = ("plain", "sdarray")


class _SdQueries:
    """Point queries answered through Elias-Fano encoded block index."""

    def __init__(self, blocks: bytes, offsets: SdArray, ranks: list[SdArray], n: int):
        self.blocks = blocks
        self.offsets = offsets
        self.ranks = ranks
        self.n = n
        self.nblocks = len(offsets)

    def _block(self, i: int):
        b = self.offsets.rank_lt(i) - 1
        start = self.offsets.get(b)
        end = self.offsets.get(b + 1) if b + 1 < self.nblocks else self.n
        return b, start, _block_runs(self.blocks, b * BLOCK_SIZE, end - start)

    def access_rank(self, i: int) -> tuple[int, int]:
        b, pos, runs = self._block(i)
        counts = [self.ranks[c].get(b) for c in range(SIGMA)]
        for sym, length in runs:
            if pos + length >= i:
                return sym, counts[sym] + i - pos
            counts[sym] += length
            pos += length
        raise IndexError(i)

    def access(self, i: int) -> int:
        return self.access_rank(i)[0]

    def rank(self, i: int, c: int) -> int:
        return self.rank_all(i)[c]

    def rank_all(self, i: int) -> list[int]:
        if i <= 0:
            return [0] * SIGMA
        b, pos, runs = self._block(i)
        counts = [self.ranks[c].get(b) for c in range(SIGMA)]
        for sym, length in runs:
            if pos + length >= i:
                counts[sym] += i - pos
                return counts
            counts[sym] += length
            pos += length
        return counts

    def select(self, j: int, c: int) -> int:
        b = self.ranks[c].rank_lt(j) - 1
        count = self.ranks[c].get(b)
        pos = self.offsets.get(b)
        end = self.offsets.get(b + 1) if b + 1 < self.nblocks else self.n
        for sym, length in _block_runs(self.blocks, b * BLOCK_SIZE, end - pos):
            if sym == c:
                if count + length >= j:
                    return pos + j - count
                count += length
            pos += length
        raise IndexError(j)


class RunLengthBwt:
    """Immutable run-length encoded BWT of an ordered read collection."""

    def __init__(self, blocks: bytes, block_offsets, block_ranks, counts,
                 alphabet: Alphabet | str = ACGTN, index_mode: str = "plain"):
        if index_mode not in INDEX_MODES:
            raise ValueError(f"index_mode must be one of {INDEX_MODES}")
        self.blocks = bytes(blocks)
        self.counts = tuple(int(x) for x in counts)
        if len(self.counts) != SIGMA:
            raise ValueError("counts must have six entries")
        self.total_length = sum(self.counts)
        self.alphabet = get_alphabet(alphabet)
        self.index_mode = index_mode
        c_array = [0]
        for cnt in self.counts:
            c_array.append(c_array[-1] + cnt)
        self.c_array = tuple(c_array)
        offsets = np.ascontiguousarray(block_offsets, dtype=np.int64)
        ranks = np.ascontiguousarray(np.asarray(block_ranks, dtype=np.int64).reshape(-1, SIGMA))
        self.block_count = int(offsets.size)
        if len(self.blocks) != self.block_count * BLOCK_SIZE or ranks.shape[0] != self.block_count:
            raise CorruptionError("block payload and block index disagree on the block count")
        self._core = None
        if index_mode == "plain":
            self.block_offsets = offsets
            self.block_ranks = ranks
            self._queries = self.core
        else:
            self._sd_offsets = SdArray(offsets)
            self._sd_ranks = [SdArray(ranks[:, c]) for c in range(SIGMA)]
            self._queries = _SdQueries(self.blocks, self._sd_offsets, self._sd_ranks, self.total_length)

    # --- construction -------------------------------------------------------

    @classmethod
    def from_runs(cls, runs: Iterable, alphabet: Alphabet | str = ACGTN,
                  index_mode: str = "plain") -> "RunLengthBwt":
        writer = _backend.active.BlockWriter()
        for sym, length in runs:
            if not 0 <= sym < SIGMA:
                raise ValueError(f"symbol {sym} outside [0, 5]")
            if length < 1:
                raise ValueError("run lengths must be positive")
            writer.add(sym, length)
        return cls._from_writer(writer, alphabet, index_mode)

    @classmethod
    def from_run_arrays(cls, symbols, lengths, alphabet: Alphabet | str = ACGTN,
                        index_mode: str = "plain") -> "RunLengthBwt":
        writer = _backend.active.BlockWriter()
        writer.add_runs(symbols, lengths)
        return cls._from_writer(writer, alphabet, index_mode)

    @classmethod
    def from_symbols(cls, symbols, alphabet: Alphabet | str = ACGTN,
                     index_mode: str = "plain") -> "RunLengthBwt":
        syms, lens = symbols_to_runs(symbols)
        return cls.from_run_arrays(syms, lens, alphabet, index_mode)

    @classmethod
    def from_text(cls, text: str, alphabet: Alphabet | str = ACGTN,
                  index_mode: str = "plain") -> "RunLengthBwt":
        """Build from a ``$ACGTN`` string such as ``"CG$$AA"`` (tests, debugging)."""
        alphabet = get_alphabet(alphabet)
        return cls.from_symbols(np.array([alphabet.chars.index(ch) for ch in text], dtype=np.uint8),
                                alphabet, index_mode)

    @classmethod
    def _from_writer(cls, writer, alphabet, index_mode):
        blocks, offsets, ranks, counts = writer.finish()
        return cls(blocks, offsets, ranks, counts, alphabet, index_mode)

    def with_index_mode(self, index_mode: str) -> "RunLengthBwt":
        if index_mode == self.index_mode:
            return self
        offsets, ranks = self.plain_index()
        return RunLengthBwt(self.blocks, offsets, ranks, self.counts, self.alphabet, index_mode)

    # --- basic properties ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.total_length

    @property
    def sequence_count(self) -> int:
        return self.counts[0]

    m = sequence_count

    def __len__(self) -> int:
        return self.total_length

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunLengthBwt):
            return NotImplemented
        return (self.counts == other.counts and self.blocks == other.blocks
                and self.alphabet.name == other.alphabet.name)

    __hash__ = None

    def __repr__(self) -> str:
        return (f"RunLengthBwt(n={self.n}, m={self.m}, blocks={self.block_count},"
                f" alphabet={self.alphabet.name!r})")

    @property
    def payload_size(self) -> int:
        return len(self.blocks)

    def plain_index(self) -> tuple[np.ndarray, np.ndarray]:
        if self.index_mode == "plain":
            return self.block_offsets, self.block_ranks
        offsets = self._sd_offsets.to_array()
        ranks = np.stack([r.to_array() for r in self._sd_ranks], axis=1) if self.block_count else \
            np.zeros((0, SIGMA), dtype=np.int64)
        return offsets, np.ascontiguousarray(ranks)

    @property
    def core(self):
        """Kernel object for bulk work; sdarray mode materializes a plain copy."""
        if self._core is not None:
            return self._core
        offsets, ranks = self.plain_index()
        core = _backend.active.BwtCore(self.blocks, offsets, ranks, self.total_length)
        if self.index_mode == "plain":
            self._core = core
        return core

    def index_nbytes(self) -> int:
        if self.index_mode == "plain":
            return self.block_offsets.nbytes + self.block_ranks.nbytes
        return self._sd_offsets.nbytes() + sum(r.nbytes() for r in self._sd_ranks)

    # --- queries ------------------------------------------------------------

    def _check_position(self, i: int) -> None:
        if not 1 <= i <= self.total_length:
            raise BoundsError(f"position {i} outside [1, {self.total_length}]")

    @staticmethod
    def _check_symbol(c: int) -> None:
        if not 0 <= c < SIGMA:
            raise BoundsError(f"symbol {c} outside [0, 5]")

    def access(self, i: int) -> int:
        self._check_position(i)
        return self._queries.access(i)

    def __getitem__(self, i: int) -> int:
        return self.access(i)

    def rank(self, i: int, c: int) -> int:
        if not 0 <= i <= self.total_length:
            raise BoundsError(f"position {i} outside [0, {self.total_length}]")
        self._check_symbol(c)
        if i == 0:
            return 0
        return self._queries.rank(i, c)

    def rank_all(self, i: int) -> list[int]:
        """``rank(i, c)`` for every symbol in one block decode."""
        if not 0 <= i <= self.total_length:
            raise BoundsError(f"position {i} outside [0, {self.total_length}]")
        if i == 0:
            return [0] * SIGMA
        return list(self._queries.rank_all(i))

    def select(self, j: int, c: int) -> int:
        self._check_symbol(c)
        if not 1 <= j <= self.counts[c]:
            raise BoundsError(f"occurrence {j} of symbol {c} outside [1, {self.counts[c]}]")
        return self._queries.select(j, c)

    def lf(self, i: int, c: int) -> int:
        if c == 0:
            raise UnsupportedSymbolError("LF-mapping is undefined for the endmarker")
        return self.c_array[c] + self.rank(i, c)

    def lf_step(self, i: int) -> int:
        self._check_position(i)
        c, r = self._queries.access_rank(i)
        if c == 0:
            raise UnsupportedSymbolError(f"position {i} holds an endmarker")
        return self.c_array[c] + r

    def psi(self, i: int) -> int:
        self._check_position(i)
        c = bisect_left(self.c_array, i, 0, SIGMA) - 1
        return self._queries.select(i - self.c_array[c], c)

    # --- vectorized queries -------------------------------------------------

    def _positions(self, positions, low: int) -> np.ndarray:
        pos = np.ascontiguousarray(positions, dtype=np.int64).ravel()
        if pos.size and (pos.min() < low or pos.max() > self.total_length):
            raise BoundsError(f"positions outside [{low}, {self.total_length}]")
        return pos

    def access_many(self, positions) -> np.ndarray:
        pos = self._positions(positions, 1)
        if self.index_mode == "plain":
            return self.core.access_batch(pos)
        return np.array([self._queries.access(int(i)) for i in pos], dtype=np.uint8)

    def rank_all_many(self, positions) -> np.ndarray:
        """Array of shape ``(len(positions), 6)`` with ``rank_all`` of each position."""
        pos = self._positions(positions, 0)
        out = np.zeros((pos.size, SIGMA), dtype=np.int64)
        live = np.flatnonzero(pos > 0)
        if self.index_mode == "plain":
            out[live] = self.core.rank_all_batch(pos[live])
        else:
            for k in live:
                out[k] = self._queries.rank_all(int(pos[k]))
        return out

    def select_many(self, js, c: int) -> np.ndarray:
        self._check_symbol(c)
        js = np.ascontiguousarray(js, dtype=np.int64).ravel()
        if js.size and (js.min() < 1 or js.max() > self.counts[c]):
            raise BoundsError(f"occurrences of symbol {c} outside [1, {self.counts[c]}]")
        if self.index_mode == "plain":
            return self.core.select_batch(js, c)
        return np.array([self._queries.select(int(j), c) for j in js], dtype=np.int64)

    def lf_step_many(self, positions) -> np.ndarray:
        pos = self._positions(positions, 1)
        syms = self.access_many(pos)
        if np.any(syms == 0):
            raise UnsupportedSymbolError("LF step from an endmarker position")
        ranks = self.rank_all_many(pos)
        c_array = np.array(self.c_array, dtype=np.int64)
        return c_array[syms] + ranks[np.arange(pos.size), syms]

    def psi_many(self, positions) -> np.ndarray:
        pos = self._positions(positions, 1)
        c_array = np.array(self.c_array[:SIGMA], dtype=np.int64)
        syms = np.searchsorted(c_array, pos, side="left") - 1
        out = np.empty(pos.size, dtype=np.int64)
        for c in range(SIGMA):
            sel = np.flatnonzero(syms == c)
            if sel.size:
                out[sel] = self.select_many(pos[sel] - c_array[c], c)
        return out

    # --- bulk access --------------------------------------------------------

    def run_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Logical runs (coalesced across blocks) as symbol and length arrays."""
        return self.core.runs()

    def run_iterator(self) -> Iterator[Run]:
        syms, lens = self.run_arrays()
        for s, l in zip(syms.tolist(), lens.tolist()):
            yield Run(s, l)

    @property
    def run_count(self) -> int:
        return int(self.core.count_runs())

    def symbols(self) -> np.ndarray:
        return self.core.symbols()

    def to_text(self) -> str:
        return self.alphabet.decode(self.symbols().tolist())

    def validate(self) -> None:
        """Check the block index against a full decode; raises CorruptionError."""
        offsets, ranks = self.plain_index()
        core = self.core
        census = core.census()
        if self.block_count:
            if offsets[0] != 0:
                raise CorruptionError("first block offset is not zero")
            expected_ranks = np.vstack([np.zeros((1, SIGMA), dtype=np.int64),
                                        np.cumsum(census, axis=0)[:-1]])
            if not np.array_equal(expected_ranks, ranks):
                raise CorruptionError("block ranks disagree with the decoded blocks")
            if not np.array_equal(ranks.sum(axis=1), offsets):
                raise CorruptionError("block offsets disagree with block ranks")
            totals = census.sum(axis=0)
        else:
            totals = np.zeros(SIGMA, dtype=np.int64)
        if tuple(int(x) for x in totals) != self.counts:
            raise CorruptionError("symbol counts disagree with the decoded blocks")


def symbols_to_runs(symbols) -> tuple[np.ndarray, np.ndarray]:
    symbols = np.asarray(symbols, dtype=np.uint8)
    if symbols.size == 0:
        return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, symbols[1:] != symbols[:-1]])
    lengths = np.diff(np.r_[starts, symbols.size]).astype(np.int64)
    return symbols[starts], lengths


def empty_bwt(alphabet: Alphabet | str = ACGTN, index_mode: str = "plain") -> RunLengthBwt:
    return RunLengthBwt(b"", np.zeros(0, np.int64), np.zeros((0, SIGMA), np.int64),
                        [0] * SIGMA, alphabet, index_mode)
