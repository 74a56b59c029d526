"""Alphabet mapping and the byte codes for runs and variable-length integers.

Run ``(c, l)`` with ``l <= 41`` is a single byte ``6 * (l - 1) + c``. Longer
runs start with ``246 + c`` followed by the varint of ``l - 42``. Varints
carry 7 data bits per byte, least-significant group first, with the high bit
set when another byte follows.
"""

from __future__ import annotations

from typing import NamedTuple

from .errors import InvalidSymbolError, MalformedDataError

SIGMA = 6
ENDMARKER = 0
SHORT_RUN_LIMIT = 41
LONG_RUN_BASE = SIGMA * SHORT_RUN_LIMIT  # 246
MAX_RUN_LENGTH = 1 << 40


class Run(NamedTuple):
    symbol: int
    length: int


class Alphabet:
    """One of the two supported symbol orders, ``$ACGTN`` or ``$ACGNT``."""

    __slots__ = ("name", "chars", "flag", "_table")

    def __init__(self, name: str, chars: str, flag: int):
        self.name = name
        self.chars = chars
        self.flag = flag
        table = bytearray([chars.index("N")]) * 256
        for sym, ch in enumerate(chars[1:], start=1):
            table[ord(ch)] = sym
            table[ord(ch.lower())] = sym
        self._table = bytes(table)

    def __repr__(self) -> str:
        return f"Alphabet({self.name!r})"

    @property
    def n_symbol(self) -> int:
        return self.chars.index("N")

    def map_base(self, character) -> int:
        """Map one input character (str or byte value) to a symbol in 1..5."""
        if isinstance(character, str):
            character = ord(character) if len(character) == 1 else -1
        if not 0 <= character < 256:
            return self.n_symbol
        return self._table[character]

    def encode(self, text) -> bytes:
        """Map a whole read to a byte string of symbols."""
        if isinstance(text, str):
            text = text.encode("latin-1", errors="replace")
        return bytes(text).translate(self._table)

    def decode(self, symbols) -> str:
        return "".join(self.chars[s] for s in symbols)


ACGTN = Alphabet("acgtn", "$ACGTN", 0)
ACGNT = Alphabet("acgnt", "$ACGNT", 1)
ALPHABETS = {a.name: a for a in (ACGTN, ACGNT)}
ALPHABET_BY_FLAG = {a.flag: a for a in (ACGTN, ACGNT)}


def get_alphabet(order) -> Alphabet:
    if isinstance(order, Alphabet):
        return order
    try:
        return ALPHABETS[order.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown alphabet order {order!r}") from None


def map_base(character, alphabet: Alphabet = ACGTN) -> int:
    return alphabet.map_base(character)


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint value must be non-negative")
    out = bytearray()
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)
    return bytes(out)


def varint_size(value: int) -> int:
    size = 1
    while value >= 0x80:
        value >>= 7
        size += 1
    return size


def decode_varint(data, offset: int = 0) -> tuple[int, int]:
    """Return ``(value, bytes consumed)`` for the varint starting at ``offset``."""
    value = 0
    shift = 0
    pos = offset
    end = len(data)
    while True:
        if pos >= end:
            raise MalformedDataError(f"truncated varint at offset {offset}")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if byte < 0x80:
            return value, pos - offset
        shift += 7


def _check_symbol(symbol: int) -> None:
    if not 0 <= symbol < SIGMA:
        raise InvalidSymbolError(f"symbol {symbol} outside [0, 5]")


def run_size(length: int) -> int:
    if length <= SHORT_RUN_LIMIT:
        return 1
    return 1 + varint_size(length - SHORT_RUN_LIMIT - 1)


def encode_run(run) -> bytes:
    symbol, length = run
    _check_symbol(symbol)
    if not 1 <= length <= MAX_RUN_LENGTH:
        raise ValueError(f"run length {length} outside [1, 2^40]")
    if length <= SHORT_RUN_LIMIT:
        return bytes((SIGMA * (length - 1) + symbol,))
    return bytes((LONG_RUN_BASE + symbol,)) + encode_varint(length - SHORT_RUN_LIMIT - 1)


def decode_run(data, offset: int = 0) -> tuple[Run, int]:
    if offset >= len(data):
        raise MalformedDataError(f"no run code at offset {offset}")
    byte = data[offset]
    if byte < LONG_RUN_BASE:
        return Run(byte % SIGMA, byte // SIGMA + 1), 1
    symbol = byte - LONG_RUN_BASE
    if symbol >= SIGMA:
        raise MalformedDataError(f"invalid run header byte {byte:#x} at offset {offset}")
    extra, used = decode_varint(data, offset + 1)
    length = extra + SHORT_RUN_LIMIT + 1
    if length > MAX_RUN_LENGTH:
        raise MalformedDataError(f"run length {length} exceeds the 2^40 cap")
    return Run(symbol, length), 1 + used


def decode_runs(data) -> list[Run]:
    runs = []
    pos = 0
    while pos < len(data):
        run, used = decode_run(data, pos)
        runs.append(run)
        pos += used
    return runs


def max_piece(space: int) -> int:
    """Longest run whose code fits in ``space`` (>= 1) bytes."""
    if space <= 1:
        return SHORT_RUN_LIMIT
    return SHORT_RUN_LIMIT + (1 << (7 * (space - 1)))
