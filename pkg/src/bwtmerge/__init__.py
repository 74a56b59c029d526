"""Run-length BWT indexes for read collections, with parallel merging."""

from . import _backend
from .build import (ReadCollection, bwt_from_collection, insert_text, oracle_bwt_symbols,
                    suffix_array_oracle)
from .codec import ACGNT, ACGTN, Alphabet, Run, decode_run, encode_run, get_alphabet
from .errors import (BoundsError, BwtError, CorruptionError, IncompatibleIndexError,
                     InvalidInputError, InvalidPatternError, InvalidSymbolError,
                     MalformedDataError, UnsupportedSymbolError)
from .fmi import LexRange, count, extract, locate, verify_against
from .io import load_index, parse_reads, read_collection, save_index
from .merge import MergeConfig, MergeStats, merge_collections, merge_pair
from .rlbwt import RunLengthBwt

__version__ = "0.1.0"

__all__ = [
    "ACGNT", "ACGTN", "Alphabet", "BoundsError", "BwtError", "CorruptionError",
    "IncompatibleIndexError", "InvalidInputError", "InvalidPatternError", "InvalidSymbolError",
    "LexRange", "MalformedDataError", "MergeConfig", "MergeStats", "ReadCollection", "Run",
    "RunLengthBwt", "UnsupportedSymbolError", "bwt_from_collection", "count", "decode_run",
    "encode_run", "extract", "get_alphabet", "insert_text", "load_index", "locate",
    "merge_collections", "merge_pair", "oracle_bwt_symbols", "parse_reads", "read_collection",
    "save_index", "suffix_array_oracle", "verify_against",
]


def backend() -> str:
    """Name of the kernel backend in use: ``"compiled"`` or ``"python"``."""
    return _backend.active.BACKEND
