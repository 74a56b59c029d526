"""Merged rank stream over in-memory buffers and spill files."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np

from .. import _backend
from ..errors import CorruptionError
from .buffers import RankRun, RankRunBuffer, open_spill_file


class RankStream:
    """Strictly increasing, coalesced rank runs merged from several sources.

    Sources are ``RankRunBuffer`` objects or spill file paths. Spill files are
    closed and, with ``delete_files``, removed as soon as they are exhausted.
    """

    def __init__(self, sources, expected_total: int | None = None, delete_files: bool = True,
                 batch_runs: int = 1 << 16):
        self.batch_runs = batch_runs
        self.expected_total = expected_total
        self._files: dict[int, tuple[object, Path]] = {}
        self._delete = delete_files
        specs = []
        try:
            for src in sources:
                if isinstance(src, RankRunBuffer):
                    if src.run_count:
                        specs.append((src.payload, src.run_count, src.total_length, "in-memory buffer"))
                else:
                    path = Path(src)
                    f, count, total = open_spill_file(path)
                    self._files[len(specs)] = (f, path)
                    specs.append((f, count, total, str(path)))
            self._merge = _backend.active.MultiwayMerge(specs, self._exhausted)
        except BaseException:
            self.close()
            raise
        self.emitted = 0

    def _exhausted(self, idx: int) -> None:
        entry = self._files.pop(idx, None)
        if entry is None:
            return
        f, path = entry
        f.close()
        if self._delete:
            path.unlink(missing_ok=True)

    def batches(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        try:
            while True:
                heads, lengths = self._merge.next_batch(self.batch_runs)
                if not heads.size:
                    break
                self.emitted += int(lengths.sum())
                yield heads, lengths
            if self.expected_total is not None and self.emitted != self.expected_total:
                raise CorruptionError(
                    f"rank stream covers {self.emitted} suffixes, expected {self.expected_total}")
        finally:
            self.close()

    def __iter__(self) -> Iterator[RankRun]:
        for heads, lengths in self.batches():
            for h, l in zip(heads.tolist(), lengths.tolist()):
                yield RankRun(h, l)

    def close(self) -> None:
        for idx in list(self._files):
            self._exhausted(idx)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def rank_stream(sources, expected_total: int | None = None) -> RankStream:
    return RankStream(sources, expected_total)
