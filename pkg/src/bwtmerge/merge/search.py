"""Search phase: reverse-trie traversal of B's suffixes against A.

Each trie node stands for a distinct suffix ``X`` of collection B with its
rank ``r`` in A and its range ``[sp, ep]`` in B, and emits the rank run
``(r, ep + 1 - sp)``. Child ``cX`` has rank ``LF_A(r, c)`` and range
``[LF_B(sp - 1, c) + 1, LF_B(ep, c)]``. The root and depth-1 nodes are handled
here; the depth-2 subtrees form a task pool for the worker threads.
"""

from __future__ import annotations

import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .. import _backend
from ..codec import SIGMA
from ..errors import CorruptionError, IncompatibleIndexError
from ..rlbwt import RunLengthBwt
from .buffers import MergeBufferTree, RankRunBuffer, RunBuffer, open_spill_file
from .config import MergeConfig


@dataclass
class SearchResult:
    spill_files: list[Path] = field(default_factory=list)
    residual: list[RankRunBuffer] = field(default_factory=list)
    nodes: int = 0
    thread_buffers: int = 0
    carries: int = 0
    spill_bytes: int = 0


def check_compatible(a: RunLengthBwt, b: RunLengthBwt) -> None:
    if a.alphabet.name != b.alphabet.name:
        raise IncompatibleIndexError(
            f"alphabet orders differ: {a.alphabet.chars} vs {b.alphabet.chars}")


def children(a: RunLengthBwt, b: RunLengthBwt, rank: int, sp: int, ep: int):
    """Non-empty children ``(rank, sp, ep)`` of a trie node, for c = 1..5."""
    lo = b.rank_all(sp - 1)
    hi = b.rank_all(ep)
    ra = a.rank_all(rank)
    out = []
    for c in range(1, SIGMA):
        if hi[c] > lo[c]:
            out.append((a.c_array[c] + ra[c], b.c_array[c] + lo[c] + 1, b.c_array[c] + hi[c]))
    return out


def top_of_trie(a: RunLengthBwt, b: RunLengthBwt, run_buffer: RunBuffer):
    """Emit the root and depth-1 nodes; return the depth-2 nodes as tasks."""
    root = (a.m, 1, b.m)
    run_buffer.emit(root[0], root[2] + 1 - root[1])
    tasks = []
    for node in children(a, b, *root):
        run_buffer.emit(node[0], node[2] + 1 - node[1])
        tasks.extend(children(a, b, *node))
    return tasks


def search_phase(bwt_a: RunLengthBwt, bwt_b: RunLengthBwt, config: MergeConfig,
                 spill_dir: Path | str) -> SearchResult:
    check_compatible(bwt_a, bwt_b)
    kernels = _backend.active
    core_a = bwt_a.core
    core_b = bwt_b.core
    tree = MergeBufferTree(config.merge_buffers, spill_dir)

    top = RunBuffer(config.run_buffer_pairs)
    tasks = deque(top_of_trie(bwt_a, bwt_b, top))
    residual = [top.flush()]
    lock = threading.Lock()
    node_counts = []

    def worker():
        searcher = kernels.SubtreeSearch(core_a, core_b, bwt_a.c_array[:SIGMA], bwt_b.c_array[:SIGMA],
                                         config.run_buffer_pairs, config.thread_buffer_bytes)
        while True:
            with lock:
                if not tasks:
                    break
                task = tasks.popleft()
            searcher.push(*task)
            while (full := searcher.step()) is not None:
                tree.insert(RankRunBuffer(*full))
        rest = searcher.flush()
        with lock:
            if rest is not None:
                residual.append(RankRunBuffer(*rest))
            node_counts.append(searcher.nodes)

    workers = max(1, min(config.threads, len(tasks)))
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="bwt-search") as pool:
        for future in [pool.submit(worker) for _ in range(workers)]:
            future.result()

    residual = [r for r in residual if r.run_count] + tree.residual()
    return SearchResult(
        spill_files=list(tree.spill_files),
        residual=residual,
        nodes=sum(node_counts) + 1 + len(children(bwt_a, bwt_b, bwt_a.m, 1, bwt_b.m)),
        thread_buffers=tree.inserted,
        carries=tree.carries,
        spill_bytes=tree.spill_bytes,
    )


def emitted_total(result: SearchResult) -> int:
    """Total rank-run length across residual buffers and spill file headers."""
    total = sum(b.total_length for b in result.residual)
    for path in result.spill_files:
        f, _, spilled = open_spill_file(path)
        f.close()
        total += spilled
    return total


def check_conservation(result: SearchResult, n_b: int) -> None:
    total = emitted_total(result)
    if total != n_b:
        raise CorruptionError(f"search emitted {total} suffixes, B has {n_b}")
