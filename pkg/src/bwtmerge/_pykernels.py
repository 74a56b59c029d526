"""Pure-Python kernels. Same interface as the compiled ``_kernels`` module.

Used when the extension is not built, or when ``BWTMERGE_PURE_PYTHON=1``.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left

import numpy as np

from .codec import (
    LONG_RUN_BASE,
    SHORT_RUN_LIMIT,
    SIGMA,
    encode_run,
    max_piece,
    run_size,
)
from .errors import CorruptionError, MalformedDataError

BACKEND = "python"
BLOCK_SIZE = 64
_CHUNK = 1 << 16


def _block_runs(blocks, start, count):
    """Yield ``(symbol, length)`` for the ``count`` symbols of the block at ``start``."""
    pos = start
    end = start + BLOCK_SIZE
    done = 0
    while done < count:
        if pos >= end:
            raise CorruptionError("run codes overflow a 64-byte block")
        byte = blocks[pos]
        pos += 1
        if byte < LONG_RUN_BASE:
            sym = byte % SIGMA
            length = byte // SIGMA + 1
        else:
            sym = byte - LONG_RUN_BASE
            if sym >= SIGMA:
                raise CorruptionError(f"invalid run header byte {byte:#x}")
            extra = 0
            shift = 0
            while True:
                if pos >= end:
                    raise CorruptionError("run codes overflow a 64-byte block")
                b = blocks[pos]
                pos += 1
                extra |= (b & 0x7F) << shift
                shift += 7
                if b < 0x80:
                    break
            length = extra + SHORT_RUN_LIMIT + 1
        done += length
        if done > count:
            raise CorruptionError("block decodes past its recorded length")
        yield sym, length


def _write_varint(out: bytearray, value: int) -> None:
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


class BlockWriter:
    """Packs runs into 64-byte blocks, coalescing adjacent equal symbols."""

    def __init__(self):
        self._blocks = bytearray()
        self._offsets: list[int] = []
        self._ranks: list[list[int]] = []
        self._counts = [0] * SIGMA
        self._total = 0
        self._used = BLOCK_SIZE
        self._sym = -1
        self._len = 0

    def add(self, sym: int, length: int) -> None:
        if length <= 0:
            return
        if sym == self._sym:
            self._len += length
            return
        if self._len:
            self._write(self._sym, self._len)
        self._sym = sym
        self._len = length

    def add_runs(self, syms, lengths) -> None:
        for s, l in zip(np.asarray(syms).tolist(), np.asarray(lengths).tolist()):
            self.add(s, l)

    def _write(self, sym: int, length: int) -> None:
        blocks = self._blocks
        while length:
            space = BLOCK_SIZE - self._used
            if space == 0:
                blocks.extend(bytes(BLOCK_SIZE))
                self._offsets.append(self._total)
                self._ranks.append(list(self._counts))
                self._used = 0
                space = BLOCK_SIZE
            piece = length if run_size(length) <= space else max_piece(space)
            code = encode_run((sym, piece))
            start = len(blocks) - BLOCK_SIZE + self._used
            blocks[start:start + len(code)] = code
            self._used += len(code)
            self._counts[sym] += piece
            self._total += piece
            length -= piece

    def reserve(self, nbytes: int) -> None:
        """Capacity hint; a no-op here."""

    def finish(self):
        if self._len:
            self._write(self._sym, self._len)
            self._sym = -1
            self._len = 0
        offsets = np.array(self._offsets, dtype=np.int64)
        ranks = np.array(self._ranks, dtype=np.int64).reshape(-1, SIGMA)
        return bytes(self._blocks), offsets, ranks, np.array(self._counts, dtype=np.int64)


class BwtCore:
    """Rank/select/access over the 64-byte block layout."""

    def __init__(self, blocks, offsets, ranks, n):
        self.blocks = bytes(blocks)
        self.n = int(n)
        self.nblocks = len(offsets)
        self._offsets = [int(x) for x in offsets]
        self._rows = np.asarray(ranks, dtype=np.int64).reshape(-1, SIGMA).tolist()
        self._cols = [[row[c] for row in self._rows] for c in range(SIGMA)]

    def _block_len(self, b: int) -> int:
        end = self._offsets[b + 1] if b + 1 < self.nblocks else self.n
        return end - self._offsets[b]

    def _runs(self, b: int):
        return _block_runs(self.blocks, b * BLOCK_SIZE, self._block_len(b))

    def _find(self, i: int) -> int:
        return bisect_left(self._offsets, i) - 1

    def access(self, i: int) -> int:
        b = self._find(i)
        pos = self._offsets[b]
        for sym, length in self._runs(b):
            pos += length
            if pos >= i:
                return sym
        raise IndexError(i)

    def access_rank(self, i: int) -> tuple[int, int]:
        b = self._find(i)
        pos = self._offsets[b]
        counts = list(self._rows[b])
        for sym, length in self._runs(b):
            if pos + length >= i:
                return sym, counts[sym] + i - pos
            counts[sym] += length
            pos += length
        raise IndexError(i)

    def rank(self, i: int, c: int) -> int:
        if i <= 0:
            return 0
        b = self._find(i)
        pos = self._offsets[b]
        count = self._rows[b][c]
        for sym, length in self._runs(b):
            if pos + length >= i:
                if sym == c:
                    count += i - pos
                return count
            if sym == c:
                count += length
            pos += length
        return count

    def rank_all(self, i: int) -> list[int]:
        if i <= 0:
            return [0] * SIGMA
        b = self._find(i)
        pos = self._offsets[b]
        counts = list(self._rows[b])
        for sym, length in self._runs(b):
            if pos + length >= i:
                counts[sym] += i - pos
                return counts
            counts[sym] += length
            pos += length
        return counts

    def select(self, j: int, c: int) -> int:
        col = self._cols[c]
        b = bisect_left(col, j) - 1
        count = col[b]
        pos = self._offsets[b]
        for sym, length in self._runs(b):
            if sym == c:
                if count + length >= j:
                    return pos + j - count
                count += length
            pos += length
        raise IndexError(j)

    def access_batch(self, positions):
        return np.array([self.access(int(i)) for i in positions], dtype=np.uint8)

    def rank_all_batch(self, positions):
        out = np.zeros((len(positions), SIGMA), dtype=np.int64)
        for k, i in enumerate(positions):
            out[k] = self.rank_all(int(i))
        return out

    def select_batch(self, js, c: int):
        return np.array([self.select(int(j), c) for j in js], dtype=np.int64)

    def block_runs(self):
        """Per-block run pieces in order, without coalescing."""
        for b in range(self.nblocks):
            yield from self._runs(b)

    def count_runs(self):
        total = 0
        last = -1
        for sym, _ in self.block_runs():
            if sym != last:
                total += 1
                last = sym
        return total

    def runs(self):
        syms: list[int] = []
        lens: list[int] = []
        for sym, length in self.block_runs():
            if syms and syms[-1] == sym:
                lens[-1] += length
            else:
                syms.append(sym)
                lens.append(length)
        return np.array(syms, dtype=np.uint8), np.array(lens, dtype=np.int64)

    def symbols(self):
        syms, lens = self.runs()
        return np.repeat(syms, lens)

    def census(self):
        """Per-block symbol counts; raises CorruptionError on malformed blocks."""
        out = np.zeros((self.nblocks, SIGMA), dtype=np.int64)
        for b in range(self.nblocks):
            length = self._block_len(b)
            if length <= 0:
                raise CorruptionError(f"block {b} has non-positive length")
            prev = -1
            done = 0
            for sym, run_len in self._runs(b):
                if sym == prev:
                    raise CorruptionError(f"block {b} holds adjacent runs of one symbol")
                prev = sym
                out[b, sym] += run_len
                done += run_len
            if done != length:
                raise CorruptionError(f"block {b} decodes to {done} symbols, expected {length}")
        return out


# --- rank-run buffers -------------------------------------------------------

def _coalesce_sorted(heads, lengths):
    heads = np.asarray(heads, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if heads.size == 0:
        return heads, lengths
    order = np.argsort(heads, kind="stable")
    heads = heads[order]
    lengths = lengths[order]
    starts = np.flatnonzero(np.r_[True, heads[1:] != heads[:-1]])
    return heads[starts], np.add.reduceat(lengths, starts)


def _encode_sorted(heads, lengths):
    out = bytearray()
    prev = 0
    total = 0
    for h, l in zip(heads.tolist(), lengths.tolist()):
        _write_varint(out, h - prev)
        _write_varint(out, l)
        prev = h
        total += l
    return bytes(out), len(heads), total


def encode_rank_runs(heads, lengths):
    """Sort by head, coalesce equal heads, encode. Returns (payload, runs, total)."""
    h, l = _coalesce_sorted(heads, lengths)
    return _encode_sorted(h, l)


def _iter_payload(data):
    pos = 0
    end = len(data)
    head = 0
    while pos < end:
        vals = []
        for _ in range(2):
            value = 0
            shift = 0
            while True:
                if pos >= end:
                    raise MalformedDataError("truncated rank-run payload")
                b = data[pos]
                pos += 1
                value |= (b & 0x7F) << shift
                shift += 7
                if b < 0x80:
                    break
            vals.append(value)
        head += vals[0]
        if vals[1] == 0:
            raise MalformedDataError("zero-length rank run")
        yield head, vals[1]


def decode_rank_runs(payload):
    heads: list[int] = []
    lens: list[int] = []
    for h, l in _iter_payload(payload):
        heads.append(h)
        lens.append(l)
    return np.array(heads, dtype=np.int64), np.array(lens, dtype=np.int64)


def merge_rank_runs(first, second):
    h1, l1 = decode_rank_runs(first)
    h2, l2 = decode_rank_runs(second)
    return encode_rank_runs(np.concatenate([h1, h2]), np.concatenate([l1, l2]))


# --- search -----------------------------------------------------------------

class SubtreeSearch:
    """Depth-first reverse-trie search with a private run buffer and thread buffer."""

    def __init__(self, core_a, core_b, c_a, c_b, run_pairs, thread_bytes):
        self.core_a = core_a
        self.core_b = core_b
        self.c_a = [int(x) for x in c_a]
        self.c_b = [int(x) for x in c_b]
        self.run_pairs = int(run_pairs)
        self.thread_bytes = int(thread_bytes)
        self._stack: list[tuple[int, int, int]] = []
        self._heads: list[int] = []
        self._lens: list[int] = []
        self._thread = (b"", 0, 0)
        self.nodes = 0

    def push(self, rank, sp, ep):
        if sp <= ep:
            self._stack.append((int(rank), int(sp), int(ep)))

    def _compact(self):
        if not self._heads:
            return
        payload = encode_rank_runs(self._heads, self._lens)[0]
        self._heads = []
        self._lens = []
        if self._thread[1]:
            self._thread = merge_rank_runs(self._thread[0], payload)
        else:
            self._thread = (payload,) + tuple(_payload_stats(payload))

    def _take(self):
        out = self._thread
        self._thread = (b"", 0, 0)
        return out

    def step(self):
        stack = self._stack
        core_a, core_b, c_a, c_b = self.core_a, self.core_b, self.c_a, self.c_b
        while stack:
            r, sp, ep = stack.pop()
            self.nodes += 1
            self._heads.append(r)
            self._lens.append(ep + 1 - sp)
            if sp == ep:
                c, rk = core_b.access_rank(sp)
                if c:
                    child = c_b[c] + rk
                    stack.append((c_a[c] + core_a.rank(r, c), child, child))
            else:
                lo = core_b.rank_all(sp - 1)
                hi = core_b.rank_all(ep)
                ra = core_a.rank_all(r)
                for c in range(SIGMA - 1, 0, -1):
                    if hi[c] > lo[c]:
                        stack.append((c_a[c] + ra[c], c_b[c] + lo[c] + 1, c_b[c] + hi[c]))
            if len(self._heads) >= self.run_pairs:
                self._compact()
                if len(self._thread[0]) >= self.thread_bytes:
                    return self._take()
        return None

    def flush(self):
        self._compact()
        if self._thread[1] == 0:
            return None
        return self._take()


def _payload_stats(payload):
    count = 0
    total = 0
    for _, l in _iter_payload(payload):
        count += 1
        total += l
    return count, total


# --- multiway merge ---------------------------------------------------------

def _source_iter(data, name):
    if isinstance(data, (bytes, bytearray, memoryview)):
        yield from _iter_payload(data)
        return
    buf = b""
    head = 0
    eof = False
    while True:
        if not eof and len(buf) < 32:
            chunk = data.read(_CHUNK)
            if chunk:
                buf += chunk
            else:
                eof = True
        if not buf:
            return
        pos = 0
        vals = []
        try:
            for _ in range(2):
                value = 0
                shift = 0
                while True:
                    b = buf[pos]
                    pos += 1
                    value |= (b & 0x7F) << shift
                    shift += 7
                    if b < 0x80:
                        break
                vals.append(value)
        except IndexError:
            if eof:
                raise CorruptionError(f"truncated rank-run payload in {name}") from None
            buf += data.read(_CHUNK)
            continue
        buf = buf[pos:]
        if vals[1] == 0:
            raise CorruptionError(f"zero-length rank run in {name}")
        head += vals[0]
        yield head, vals[1]


class MultiwayMerge:
    """Heap-based merge of sorted rank-run sources into one coalesced stream.

    Each source is ``(data, run_count, total_length, name)`` where ``data`` is a
    payload bytes object or a binary file positioned at the payload start.
    """

    def __init__(self, sources, on_exhausted=None):
        self._sources = list(sources)
        self._on_exhausted = on_exhausted
        self._iters = [_source_iter(s[0], s[3]) for s in self._sources]
        self._seen = [[0, 0] for _ in self._sources]
        self._last = [0] * len(self._sources)
        self._heap = []
        for idx in range(len(self._iters)):
            self._advance(idx)
        self._pending = None
        self.total = 0

    def _advance(self, idx):
        try:
            h, l = next(self._iters[idx])
        except StopIteration:
            data, count, total, name = self._sources[idx]
            if self._seen[idx] != [count, total]:
                raise CorruptionError(
                    f"{name}: decoded {self._seen[idx][0]} runs / {self._seen[idx][1]} symbols,"
                    f" header says {count} / {total}") from None
            if self._on_exhausted is not None:
                self._on_exhausted(idx)
            return
        except MalformedDataError as exc:
            raise CorruptionError(f"{self._sources[idx][3]}: {exc}") from None
        seen = self._seen[idx]
        if seen[0] and h <= self._last[idx]:
            raise CorruptionError(f"{self._sources[idx][3]}: heads not increasing")
        seen[0] += 1
        seen[1] += l
        heapq.heappush(self._heap, (h, idx, l))

    def next_batch(self, max_runs=1 << 16):
        heads: list[int] = []
        lens: list[int] = []
        heap = self._heap
        pending = self._pending
        while heap and len(heads) < max_runs:
            h, idx, l = heapq.heappop(heap)
            self._last[idx] = h
            self._advance(idx)
            if pending is not None and pending[0] == h:
                pending[1] += l
                continue
            if pending is not None:
                heads.append(pending[0])
                lens.append(pending[1])
            pending = [h, l]
        if not heap and pending is not None and len(heads) < max_runs:
            heads.append(pending[0])
            lens.append(pending[1])
            pending = None
        self._pending = pending
        self.total += sum(lens)
        return np.array(heads, dtype=np.int64), np.array(lens, dtype=np.int64)


# --- interleave -------------------------------------------------------------

class _Cursor:
    def __init__(self, core):
        self._it = core.block_runs()
        self.sym = -1
        self.left = 0

    def copy(self, writer, count):
        while count:
            if not self.left:
                try:
                    self.sym, self.left = next(self._it)
                except StopIteration:
                    raise CorruptionError("rank stream runs past the end of an input") from None
            take = min(count, self.left)
            writer.add(self.sym, take)
            self.left -= take
            count -= take


class Interleaver:
    """Copies A and B symbols into a fresh block writer following the rank stream."""

    def __init__(self, core_a, core_b):
        self.n_a = core_a.n
        self.n_b = core_b.n
        self._a = _Cursor(core_a)
        self._b = _Cursor(core_b)
        self._writer = BlockWriter()
        self.a_done = 0
        self.b_done = 0

    def feed(self, heads, lengths):
        for r, l in zip(np.asarray(heads).tolist(), np.asarray(lengths).tolist()):
            if r < self.a_done or r > self.n_a:
                raise CorruptionError(f"rank {r} out of order or beyond n_A = {self.n_a}")
            if self.b_done + l > self.n_b:
                raise CorruptionError("rank stream longer than n_B")
            self._a.copy(self._writer, r - self.a_done)
            self.a_done = r
            self._b.copy(self._writer, l)
            self.b_done += l

    def finish(self):
        if self.b_done != self.n_b:
            raise CorruptionError(f"rank stream covers {self.b_done} of {self.n_b} symbols of B")
        self._a.copy(self._writer, self.n_a - self.a_done)
        self.a_done = self.n_a
        return self._writer.finish()
