from __future__ import annotations

import ctypes
import ctypes.util
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import InvalidInputError
from ..rlbwt import RunLengthBwt
from .config import MergeConfig
from .interleave import interleave
from .search import check_compatible, check_conservation, search_phase
from .stream import RankStream


# glibc mallopt parameter number for the arena cap
_M_ARENA_MAX = -8


def _load_libc(symbol):
    name = ctypes.util.find_library("c")
    try:
        return getattr(ctypes.CDLL(name), symbol) if name else None
    except (OSError, AttributeError):
        return None


_malloc_trim = _load_libc("malloc_trim")
_mallopt = _load_libc("mallopt")


def release_memory() -> None:
    """Return freed heap pages to the OS where the C library supports it."""
    if _malloc_trim is not None:
        _malloc_trim(0)


def limit_arenas(count: int = 1) -> None:
    """Cap glibc malloc arenas so worker threads share one heap.

    Per-thread arenas each keep their own high-water pages, which multiplies
    peak RSS by the worker count. Must run before worker threads allocate.
    """
    if _mallopt is not None:
        _mallopt(_M_ARENA_MAX, count)


@dataclass
class MergeStats:
    """Counters and timings accumulated over one or more pairwise merges."""

    merges: int = 0
    search_seconds: float = 0.0
    interleave_seconds: float = 0.0
    nodes: int = 0
    thread_buffers: int = 0
    carries: int = 0
    spill_files: int = 0
    spill_bytes: int = 0
    peak_temp_bytes: int = 0
    per_merge: list[dict] = field(default_factory=list)


def merge_pair(bwt_a: RunLengthBwt, bwt_b: RunLengthBwt, config: MergeConfig | None = None,
               stats: MergeStats | None = None) -> RunLengthBwt:
    """BWT of collection A followed by collection B (B's texts renumbered after A's)."""
    config = config or MergeConfig()
    check_compatible(bwt_a, bwt_b)
    if bwt_b.n == 0:
        return bwt_a
    if bwt_a.n == 0:
        return bwt_b
    limit_arenas()
    spill_dir = tempfile.mkdtemp(prefix="bwtmerge-", dir=config.temp_dir)
    try:
        t0 = time.perf_counter()
        found = search_phase(bwt_a, bwt_b, config, spill_dir)
        check_conservation(found, bwt_b.n)
        release_memory()
        t1 = time.perf_counter()
        stream = RankStream(found.residual + found.spill_files, expected_total=bwt_b.n)
        found.residual = []
        merged = interleave(bwt_a, bwt_b, stream)
        del stream
        release_memory()
        t2 = time.perf_counter()
    finally:
        shutil.rmtree(spill_dir, ignore_errors=True)
    if stats is not None:
        stats.merges += 1
        stats.search_seconds += t1 - t0
        stats.interleave_seconds += t2 - t1
        stats.nodes += found.nodes
        stats.thread_buffers += found.thread_buffers
        stats.carries += found.carries
        stats.spill_files += len(found.spill_files)
        stats.spill_bytes += found.spill_bytes
        stats.peak_temp_bytes = max(stats.peak_temp_bytes, found.spill_bytes)
        stats.per_merge.append({
            "search_seconds": t1 - t0,
            "interleave_seconds": t2 - t1,
            "spill_files": len(found.spill_files),
            "spill_bytes": found.spill_bytes,
        })
    return merged


def merge_collections(inputs: Sequence[RunLengthBwt], config: MergeConfig | None = None,
                      stats: MergeStats | None = None) -> RunLengthBwt:
    """Left fold of ``merge_pair`` over two or more BWTs."""
    inputs = list(inputs)
    if len(inputs) < 2:
        raise InvalidInputError("merging needs at least two inputs")
    for other in inputs[1:]:
        check_compatible(inputs[0], other)
    merged = inputs[0]
    for other in inputs[1:]:
        merged = merge_pair(merged, other, config, stats)
    return merged
