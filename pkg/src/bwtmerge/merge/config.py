from __future__ import annotations

import os
from dataclasses import dataclass, field


def _default_threads() -> int:
    return os.cpu_count() or 1


@dataclass
class MergeConfig:
    """Buffer sizes and parallelism for one merge.

    Defaults are a desk-scale version of 128 MB run buffers, 256 MB thread
    buffers and 6 merge buffers.
    """

    run_buffer_pairs: int = 1 << 20
    thread_buffer_bytes: int = 8 << 20
    merge_buffers: int = 6
    threads: int = field(default_factory=_default_threads)
    temp_dir: str | None = None
    verify_kmer_count: int = 10_000
    verify_kmer_length: int = 32

    def __post_init__(self):
        for name in ("run_buffer_pairs", "thread_buffer_bytes", "merge_buffers", "threads",
                     "verify_kmer_count", "verify_kmer_length"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
