"""Native index files and read-collection parsers.

Index file layout, integers little-endian::

    b"RLBW"  version:u8  alphabet_flag:u8  reserved:u8[2]
    n:u64  m:u64  counts:u64[6]
    varint(block_count)
    block offsets      delta-varint, block_count values
    block ranks        block_count rows of 6 delta-varints (column deltas)
    blocks             block_count * 64 raw bytes
"""

from __future__ import annotations

import io as io_module
import os
import struct
from pathlib import Path

import numpy as np

from .build import ReadCollection
from .codec import ALPHABET_BY_FLAG, SIGMA, Alphabet, decode_varint, encode_varint, get_alphabet
from .errors import CorruptionError, InvalidInputError, MalformedDataError
from .rlbwt import BLOCK_SIZE, RunLengthBwt

INDEX_MAGIC = b"RLBW"
INDEX_VERSION = 1
_HEADER = struct.Struct("<4sBBxx8Q")


_CHUNK = 1 << 16


def _encode_varint_chunk(v: np.ndarray) -> bytes:
    shifts = np.arange(10, dtype=np.uint64) * np.uint64(7)
    groups = (v[:, None] >> shifts[None, :]) & np.uint64(0x7F)
    width = np.ones(v.size, dtype=np.int64)
    for k in range(1, 10):
        width += v >= (np.uint64(1) << np.uint64(7 * k))
    col = np.arange(10)[None, :]
    groups |= np.where(col < (width - 1)[:, None], np.uint64(0x80), np.uint64(0))
    return groups[col < width[:, None]].astype(np.uint8).tobytes()


def iter_encoded_varints(values):
    """7+1-bit varints (least significant group first), in chunks of bytes."""
    v = np.asarray(values, dtype=np.uint64).ravel()
    for start in range(0, v.size, _CHUNK):
        yield _encode_varint_chunk(v[start:start + _CHUNK])


def encode_varints(values) -> bytes:
    return b"".join(iter_encoded_varints(values))


def _decode_varint_chunk(arr: np.ndarray, count: int) -> tuple[np.ndarray, int]:
    ends = np.flatnonzero(arr < 0x80)[:count]
    if ends.size < count:
        raise MalformedDataError("truncated varint sequence")
    used = int(ends[-1]) + 1
    arr = arr[:used]
    starts = np.r_[0, ends[:-1] + 1]
    if int(np.max(ends - starts)) > 9:
        raise MalformedDataError("varint longer than 64 bits")
    group = np.repeat(np.arange(count), ends - starts + 1)
    shift = (np.arange(used) - starts[group]).astype(np.uint64) * np.uint64(7)
    parts = (arr & 0x7F).astype(np.uint64) << shift
    values = np.add.reduceat(parts, starts)
    if np.any(values > np.uint64(2**62)):
        raise MalformedDataError("varint value out of range")
    return values.astype(np.int64), used


def decode_varints(data, offset: int, count: int) -> tuple[np.ndarray, int]:
    """Decode ``count`` varints starting at ``offset``; returns ``(values, bytes consumed)``."""
    arr = np.frombuffer(data, dtype=np.uint8, offset=offset)
    out = np.empty(count, dtype=np.int64)
    pos = 0
    for start in range(0, count, _CHUNK):
        k = min(_CHUNK, count - start)
        out[start:start + k], used = _decode_varint_chunk(arr[pos:pos + 10 * k], k)
        pos += used
    return out, pos


def _write_index(bwt: RunLengthBwt, out) -> int:
    offsets, ranks = bwt.plain_index()
    nb = bwt.block_count
    out.write(_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, bwt.alphabet.flag, bwt.n, bwt.m, *bwt.counts))
    out.write(encode_varint(nb))
    if nb:
        for chunk in iter_encoded_varints(np.diff(offsets, prepend=0)):
            out.write(chunk)
        for start in range(0, nb, _CHUNK):
            rows = ranks[max(0, start - 1):start + _CHUNK]
            delta = np.diff(rows, axis=0) if start else \
                np.diff(rows, axis=0, prepend=np.zeros((1, SIGMA), dtype=np.int64))
            for chunk in iter_encoded_varints(delta):
                out.write(chunk)
    out.write(bwt.blocks)
    return out.tell()


def _read_index(f, size: int, index_mode: str, source: str) -> RunLengthBwt:
    head = f.read(_HEADER.size)
    if len(head) < 4 or head[:4] != INDEX_MAGIC:
        raise CorruptionError(f"{source}: bad magic, not an index file")
    if len(head) < _HEADER.size:
        raise CorruptionError(f"{source}: truncated header")
    magic, version, flag, *fields = _HEADER.unpack(head)
    if version != INDEX_VERSION:
        raise CorruptionError(f"{source}: unsupported format version {version}")
    if flag not in ALPHABET_BY_FLAG:
        raise CorruptionError(f"{source}: unknown alphabet flag {flag}")
    if head[6:8] != b"\0\0":
        raise CorruptionError(f"{source}: reserved header bytes are not zero")
    n, m, *counts = fields
    if m != counts[0]:
        raise CorruptionError(f"{source}: sequence count {m} disagrees with endmarker count {counts[0]}")
    if n != sum(counts):
        raise CorruptionError(f"{source}: total length {n} disagrees with symbol counts")
    pos = _HEADER.size
    try:
        nb, used = decode_varint(f.read(10), 0)
        pos += used
        index_len = size - pos - nb * BLOCK_SIZE
        if index_len < 0:
            raise CorruptionError(f"{source}: block count {nb} exceeds the file size")
        f.seek(pos)
        index = f.read(index_len)
        off_delta, used1 = decode_varints(index, 0, nb)
        rank_delta, used2 = decode_varints(index, used1, nb * SIGMA)
    except MalformedDataError as exc:
        raise CorruptionError(f"{source}: {exc}") from None
    if used1 + used2 != index_len:
        raise CorruptionError(f"{source}: block index occupies {used1 + used2} bytes, expected {index_len}")
    del index
    blocks = f.read(nb * BLOCK_SIZE)
    offsets = np.cumsum(off_delta)
    ranks = np.cumsum(rank_delta.reshape(nb, SIGMA), axis=0)
    del off_delta, rank_delta
    bwt = RunLengthBwt(blocks, offsets, ranks, counts, ALPHABET_BY_FLAG[flag], "plain")
    try:
        bwt.validate()
    except CorruptionError as exc:
        raise CorruptionError(f"{source}: {exc}") from None
    return bwt.with_index_mode(index_mode)


def serialize_index(bwt: RunLengthBwt) -> bytes:
    buf = io_module.BytesIO()
    _write_index(bwt, buf)
    return buf.getvalue()


def deserialize_index(data: bytes, index_mode: str = "plain", source: str = "index") -> RunLengthBwt:
    return _read_index(io_module.BytesIO(data), len(data), index_mode, source)


def save_index(bwt: RunLengthBwt, path: str | os.PathLike) -> int:
    """Write ``bwt`` to ``path``; a partially written file is removed on failure."""
    try:
        with open(path, "wb") as f:
            return _write_index(bwt, f)
    except BaseException:
        Path(path).unlink(missing_ok=True)
        raise


def load_index(path: str | os.PathLike, index_mode: str = "plain") -> RunLengthBwt:
    with open(path, "rb") as f:
        size = os.fstat(f.fileno()).st_size
        return _read_index(f, size, index_mode, str(path))


def parse_reads(text: bytes | str, alphabet: Alphabet | str = "acgtn", source: str = "input") -> ReadCollection:
    """Reads from plain text (one per line) or FASTA (``>`` starts a record).

    Blank lines are skipped; characters outside the alphabet map to N.
    """
    alphabet = get_alphabet(alphabet)
    if isinstance(text, str):
        text = text.encode()
    lines = [line.strip() for line in text.splitlines()]
    first = next((line for line in lines if line), b"")
    reads: list[bytes] = []
    if first.startswith(b">"):
        current: list[bytes] | None = None
        names: list[bytes] = []
        for line in lines:
            if line.startswith(b">"):
                if current is not None:
                    reads.append(b"".join(current))
                current = []
                names.append(line[1:])
            elif line and current is not None:
                current.append(line)
        if current is not None:
            reads.append(b"".join(current))
        for name, read in zip(names, reads):
            if not read:
                raise InvalidInputError(f"{source}: record {name.decode(errors='replace')!r} has no sequence")
    else:
        reads = [line for line in lines if line]
    if not reads:
        raise InvalidInputError(f"{source}: no reads found")
    return ReadCollection([alphabet.encode(r) for r in reads], alphabet)


def read_collection(path: str | os.PathLike, alphabet: Alphabet | str = "acgtn") -> ReadCollection:
    return parse_reads(Path(path).read_bytes(), alphabet, str(path))
