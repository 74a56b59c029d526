import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwtmerge import codec
from bwtmerge.codec import (ACGNT, ACGTN, MAX_RUN_LENGTH, Run, decode_run, decode_runs, decode_varint,
                            encode_run, encode_varint, get_alphabet, map_base, run_size, varint_size)
from bwtmerge.errors import InvalidSymbolError, MalformedDataError

from oracles import load_frozen, run_code, varint

FROZEN = load_frozen()


@pytest.mark.parametrize("value,expected", [(0, b"\x00"), (127, b"\x7f"), (128, b"\x80\x01")])
def test_varint_examples(value, expected):
    assert encode_varint(value) == expected
    assert decode_varint(expected, 0) == (value, len(expected))


def test_varint_truncated():
    with pytest.raises(MalformedDataError):
        decode_varint(b"\xff", 0)
    with pytest.raises(MalformedDataError):
        decode_varint(b"", 0)


def test_varint_negative_rejected():
    with pytest.raises(ValueError):
        encode_varint(-1)


@pytest.mark.parametrize("symbol,length,expected", [
    (1, 1, b"\x01"), (2, 41, b"\xf2"), (0, 42, b"\xf6\x00"), (1, 170, b"\xf7\x80\x01"),
])
def test_run_examples(symbol, length, expected):
    assert encode_run(Run(symbol, length)) == expected
    assert decode_run(expected, 0) == (Run(symbol, length), len(expected))


@pytest.mark.parametrize("run", [Run(6, 1), Run(-1, 3)])
def test_run_bad_symbol(run):
    with pytest.raises(InvalidSymbolError):
        encode_run(run)


@pytest.mark.parametrize("length", [0, -5, MAX_RUN_LENGTH + 1])
def test_run_bad_length(length):
    with pytest.raises(ValueError):
        encode_run(Run(1, length))


def test_run_truncated_tail():
    with pytest.raises(MalformedDataError):
        decode_run(b"\xf7\x80", 0)


def test_run_header_out_of_range():
    for byte in range(252, 256):
        with pytest.raises(MalformedDataError):
            decode_run(bytes([byte, 0]), 0)


def test_run_over_cap_rejected():
    with pytest.raises(MalformedDataError):
        decode_run(bytes([247]) + encode_varint(MAX_RUN_LENGTH - 41), 0)


def test_frozen_codes():
    for item in FROZEN["codec"]:
        run = Run(item["symbol"], item["length"])
        assert encode_run(run).hex() == item["bytes"]
        assert decode_run(bytes.fromhex(item["bytes"]), 0)[0] == run
    for item in FROZEN["varints"]:
        assert encode_varint(item["value"]).hex() == item["bytes"]


def test_varint_exhaustive_16_bits():
    for v in range(1 << 16):
        data = encode_varint(v)
        assert data == varint(v)
        assert decode_varint(data, 0) == (v, len(data))
        assert varint_size(v) == len(data)


@given(st.integers(0, 2**40))
def test_varint_round_trip(v):
    data = encode_varint(v)
    assert decode_varint(b"\x55" + data + b"\x80", 1) == (v, len(data))
    assert data[-1] < 0x80 and all(b >= 0x80 for b in data[:-1])


@given(st.integers(0, 5), st.integers(1, MAX_RUN_LENGTH))
def test_run_round_trip(symbol, length):
    data = encode_run(Run(symbol, length))
    assert data == run_code(symbol, length)
    assert decode_run(data + b"\x01", 0) == (Run(symbol, length), len(data))
    assert run_size(length) == len(data)
    assert (len(data) == 1) == (length <= 41)
    if length > 41:
        assert len(data) == 1 + varint_size(length - 42)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(1, 10**6)), max_size=40), st.data())
def test_concatenation_is_chunking_independent(runs, data):
    encoded = [encode_run(Run(*r)) for r in runs]
    stream = b"".join(encoded)
    assert decode_runs(stream) == [Run(*r) for r in runs]
    # any split at a code boundary decodes to the same runs
    cut = data.draw(st.integers(0, len(encoded)))
    left, right = b"".join(encoded[:cut]), b"".join(encoded[cut:])
    assert decode_runs(left) + decode_runs(right) == [Run(*r) for r in runs]


def test_map_base_examples():
    assert map_base("A") == 1
    assert map_base("N") == 5
    assert map_base("x") == 5
    assert map_base("a") == 1


def test_alphabet_orders():
    assert [map_base(ch, ACGTN) for ch in "ACGTN"] == [1, 2, 3, 4, 5]
    assert [map_base(ch, ACGNT) for ch in "ACGNT"] == [1, 2, 3, 4, 5]
    assert ACGTN.flag == 0 and ACGNT.flag == 1
    assert get_alphabet("ACGNT") is ACGNT
    with pytest.raises(ValueError):
        get_alphabet("acgu")


@given(st.text(alphabet="ACGTNacgtnRYKM-", max_size=50))
def test_alphabet_encode_decode(text):
    enc = ACGTN.encode(text)
    assert all(1 <= s <= 5 for s in enc)
    expected = "".join(ch.upper() if ch.upper() in "ACGTN" else "N" for ch in text)
    assert ACGTN.decode(enc) == expected


def test_max_piece_fits_space():
    for space in range(1, 12):
        piece = codec.max_piece(space)
        assert run_size(piece) <= max(space, 1)
        if space > 1:
            assert run_size(piece + 1) > space
