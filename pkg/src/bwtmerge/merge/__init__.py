"""Merging run-length BWTs of read collections."""

from .buffers import (MergeBufferTree, RankRun, RankRunBuffer, RunBuffer, buffer_emit,
                      merge_buffer_insert, open_spill_file, read_spill_file, write_spill_file)
from .config import MergeConfig
from .interleave import interleave
from .pipeline import MergeStats, merge_collections, merge_pair
from .search import SearchResult, check_compatible, search_phase
from .stream import RankStream, rank_stream

__all__ = [
    "MergeBufferTree", "MergeConfig", "MergeStats", "RankRun", "RankRunBuffer", "RankStream",
    "RunBuffer", "SearchResult", "buffer_emit", "check_compatible", "interleave",
    "merge_buffer_insert", "merge_collections", "merge_pair", "open_spill_file", "rank_stream",
    "read_spill_file", "search_phase", "write_spill_file",
]
