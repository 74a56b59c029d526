"""Interleave phase: copy A and B into the merged BWT following the rank stream."""

from __future__ import annotations

import queue
import threading

import numpy as np

from .. import _backend
from ..rlbwt import RunLengthBwt
from .stream import RankStream

_DONE = object()


def _as_batches(stream):
    if isinstance(stream, RankStream):
        return stream.batches()
    runs = list(stream)
    heads = np.array([r[0] for r in runs], dtype=np.int64)
    lengths = np.array([r[1] for r in runs], dtype=np.int64)
    return iter([(heads, lengths)])


def interleave(bwt_a: RunLengthBwt, bwt_b: RunLengthBwt, stream, queue_size: int = 4) -> RunLengthBwt:
    """Merged BWT of A and B; ``stream`` is a ``RankStream`` or ``(rank, length)`` pairs.

    A producer thread decodes the stream into a bounded queue while this
    thread writes the output blocks.
    """
    batches = _as_batches(stream)
    handoff: queue.Queue = queue.Queue(maxsize=queue_size)
    stop = threading.Event()

    def put(item) -> bool:
        while not stop.is_set():
            try:
                handoff.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def produce():
        try:
            for batch in batches:
                if not put(batch):
                    return
            put(_DONE)
        except BaseException as exc:
            put(exc)

    producer = threading.Thread(target=produce, name="bwt-rank-stream", daemon=True)
    producer.start()
    interleaver = _backend.active.Interleaver(bwt_a.core, bwt_b.core)
    try:
        while True:
            item = handoff.get()
            if item is _DONE:
                break
            if isinstance(item, BaseException):
                raise item
            interleaver.feed(*item)
        blocks, offsets, ranks, counts = interleaver.finish()
    finally:
        stop.set()
        producer.join()
    return RunLengthBwt(blocks, offsets, ranks, counts, bwt_a.alphabet, bwt_a.index_mode)
