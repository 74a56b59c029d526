"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--bases 200000] [--repeat 3]

Each case runs under every available backend; the table shows the best
wall time of ``--repeat`` runs and the speedup of compiled over Python.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from bwtmerge import _backend
from bwtmerge.build import bwt_from_collection
from bwtmerge.merge import MergeConfig, RankRunBuffer, merge_pair
from bwtmerge.rlbwt import RunLengthBwt, symbols_to_runs


def random_reads(rng: random.Random, bases: int, read_length: int) -> list[str]:
    return ["".join(rng.choice("ACGT") for _ in range(read_length))
            for _ in range(max(1, bases // read_length))]


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def make_cases(args):
    rng = random.Random(args.seed)
    reads_a = random_reads(rng, args.bases, args.read_length)
    reads_b = random_reads(rng, args.bases, args.read_length)
    # Symbols and run arrays are backend-independent; build them once.
    syms, lens = symbols_to_runs(bwt_from_collection(reads_a).symbols())
    nprng = np.random.default_rng(args.seed)
    heads = np.sort(nprng.integers(0, 1 << 30, size=args.runs)).astype(np.int64)
    other = np.sort(nprng.integers(0, 1 << 30, size=args.runs)).astype(np.int64)
    ones = np.ones(args.runs, dtype=np.int64)

    def block_writing():
        RunLengthBwt.from_run_arrays(syms, lens)

    def setup_queries():
        bwt = RunLengthBwt.from_run_arrays(syms, lens)
        positions = nprng.integers(1, bwt.n + 1, size=args.queries)
        return lambda: bwt.rank_all_many(positions)

    def rank_run_codec():
        buf = RankRunBuffer.from_arrays(heads, ones)
        buf.merge(RankRunBuffer.from_arrays(other, ones)).arrays()

    def setup_merge():
        a = bwt_from_collection(reads_a)
        b = bwt_from_collection(reads_b)
        config = MergeConfig(threads=1, run_buffer_pairs=4096, thread_buffer_bytes=64 << 10)
        return lambda: merge_pair(a, b, config)

    return [
        ("block writing", lambda: block_writing),
        ("rank_all batch", setup_queries),
        ("rank-run encode+merge", lambda: rank_run_codec),
        ("end-to-end merge", setup_merge),
    ]


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bases", type=int, default=200_000, help="bases per collection")
    parser.add_argument("--read-length", type=int, default=100)
    parser.add_argument("--queries", type=int, default=100_000)
    parser.add_argument("--runs", type=int, default=200_000, help="rank runs per buffer")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    backends = _backend.available()
    results: dict[str, dict[str, float]] = {}
    for name, setup in make_cases(args):
        for backend in backends:
            with _backend.use(backend):
                fn = setup()
                results.setdefault(name, {})[backend] = best_of(fn, args.repeat)

    header = f"{'case':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, row in results.items():
        cells = "".join(f"{row[b]:>11.3f}s" for b in backends)
        speedup = ""
        if "compiled" in row and "python" in row and row["compiled"] > 0:
            speedup = f"{row['python'] / row['compiled']:>9.1f}x"
        print(f"{name:<24}{cells}{speedup:>10}")


if __name__ == "__main__":
    main()
