"""Rank-run buffers, the merge-buffer tree and spill files.

A compressed buffer stores runs sorted by head as alternating varints: the
head difference to the previous run (the first head absolute), then the run
length. Equal heads are always coalesced.

Spill file layout: ``b"BWTM"``, version byte, three reserved zero bytes,
``varint(run_count)``, ``varint(total_length)``, then the payload.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .. import _backend
from ..codec import decode_varint, encode_varint
from ..errors import CorruptionError, MalformedDataError

SPILL_MAGIC = b"BWTM"
SPILL_VERSION = 1


class RankRun(NamedTuple):
    head: int
    length: int


@dataclass(frozen=True)
class RankRunBuffer:
    payload: bytes = b""
    run_count: int = 0
    total_length: int = 0

    @classmethod
    def from_arrays(cls, heads, lengths) -> "RankRunBuffer":
        return cls(*_backend.active.encode_rank_runs(heads, lengths))

    @classmethod
    def from_runs(cls, runs) -> "RankRunBuffer":
        runs = list(runs)
        heads = np.array([r[0] for r in runs], dtype=np.int64)
        lengths = np.array([r[1] for r in runs], dtype=np.int64)
        return cls.from_arrays(heads, lengths)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return _backend.active.decode_rank_runs(self.payload)

    def runs(self) -> list[RankRun]:
        heads, lengths = self.arrays()
        return [RankRun(h, l) for h, l in zip(heads.tolist(), lengths.tolist())]

    def merge(self, other: "RankRunBuffer") -> "RankRunBuffer":
        if not other.run_count:
            return self
        if not self.run_count:
            return other
        return RankRunBuffer(*_backend.active.merge_rank_runs(self.payload, other.payload))

    @property
    def nbytes(self) -> int:
        return len(self.payload)

    def __bool__(self) -> bool:
        return self.run_count > 0


class RunBuffer:
    """Uncompressed ``(head, length)`` pairs feeding one thread buffer."""

    def __init__(self, capacity: int, thread_buffer: RankRunBuffer | None = None):
        if capacity < 1:
            raise ValueError("run buffer capacity must be positive")
        self.capacity = capacity
        self.heads: list[int] = []
        self.lengths: list[int] = []
        self.thread_buffer = thread_buffer or RankRunBuffer()

    def __len__(self) -> int:
        return len(self.heads)

    def emit(self, head: int, length: int) -> None:
        self.heads.append(head)
        self.lengths.append(length)
        if len(self.heads) >= self.capacity:
            self.compact()

    def compact(self) -> None:
        if not self.heads:
            return
        compressed = RankRunBuffer.from_arrays(self.heads, self.lengths)
        self.heads = []
        self.lengths = []
        self.thread_buffer = self.thread_buffer.merge(compressed)

    def flush(self) -> RankRunBuffer:
        """Compress whatever is pending and hand over the thread buffer."""
        self.compact()
        out = self.thread_buffer
        self.thread_buffer = RankRunBuffer()
        return out


def buffer_emit(run_buffer: RunBuffer, rank_run) -> RunBuffer:
    run_buffer.emit(*rank_run)
    return run_buffer


def write_spill_file(path: Path, buffer: RankRunBuffer) -> int:
    """Write one spill file; removes the partial file on failure."""
    header = (SPILL_MAGIC + bytes((SPILL_VERSION, 0, 0, 0))
              + encode_varint(buffer.run_count) + encode_varint(buffer.total_length))
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(buffer.payload)
    except OSError:
        Path(path).unlink(missing_ok=True)
        raise
    return len(header) + len(buffer.payload)


def open_spill_file(path: Path):
    """Open a spill file; returns ``(file, run_count, total_length)`` positioned at the payload."""
    f = open(path, "rb")
    try:
        head = f.read(8)
        if len(head) < 8 or head[:4] != SPILL_MAGIC:
            raise CorruptionError(f"{path}: not a spill file (bad magic)")
        if head[4] != SPILL_VERSION:
            raise CorruptionError(f"{path}: unsupported spill file version {head[4]}")
        rest = f.read(20)
        try:
            run_count, used1 = decode_varint(rest, 0)
            total, used2 = decode_varint(rest, used1)
        except MalformedDataError:
            raise CorruptionError(f"{path}: truncated spill file header") from None
        f.seek(8 + used1 + used2)
        return f, run_count, total
    except BaseException:
        f.close()
        raise


def read_spill_file(path: Path) -> RankRunBuffer:
    f, run_count, total = open_spill_file(path)
    with f:
        payload = f.read()
    buf = RankRunBuffer(payload, run_count, total)
    try:
        heads, lengths = buf.arrays()
    except MalformedDataError as exc:
        raise CorruptionError(f"{path}: {exc}") from None
    if heads.size != run_count or int(lengths.sum()) != total:
        raise CorruptionError(f"{path}: payload disagrees with the header counts")
    return buf


class MergeBufferTree:
    """Binary-counter hierarchy ``M_1 .. M_k`` of compressed buffers.

    Level ``i`` (1-based) holds the merge of ``2**(i-1)`` thread buffers. A
    carry that passes ``M_k`` goes to disk as one spill file.
    """

    def __init__(self, k: int, spill_dir: Path | str):
        if k < 1:
            raise ValueError("the merge-buffer tree needs at least one level")
        self.k = k
        self.levels: list[RankRunBuffer | None] = [None] * k
        self.spill_dir = Path(spill_dir)
        self.spill_files: list[Path] = []
        self.spill_bytes = 0
        self.inserted = 0
        self.carries = 0
        self._locks = [threading.Lock() for _ in range(k)]
        self._spill_lock = threading.Lock()
        self._counter = itertools.count()

    def insert(self, thread_buffer: RankRunBuffer) -> Path | None:
        carry = thread_buffer
        with self._spill_lock:
            self.inserted += 1
        for i in range(self.k):
            with self._locks[i]:
                held = self.levels[i]
                if held is None:
                    self.levels[i] = carry
                    return None
                self.levels[i] = None
            carry = carry.merge(held)
            with self._spill_lock:
                self.carries += 1
        return self._spill(carry)

    def _spill(self, buffer: RankRunBuffer) -> Path:
        with self._spill_lock:
            path = self.spill_dir / f"spill-{next(self._counter):06d}.bwtm"
            self.spill_bytes += write_spill_file(path, buffer)
            self.spill_files.append(path)
        return path

    def residual(self) -> list[RankRunBuffer]:
        return [b for b in self.levels if b is not None and b.run_count]


def merge_buffer_insert(tree: MergeBufferTree, thread_buffer: RankRunBuffer):
    """Insert a full thread buffer; returns ``(tree, spill path or None)``."""
    return tree, tree.insert(thread_buffer)
