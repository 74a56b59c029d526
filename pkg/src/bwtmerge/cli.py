"""Command-line interface: ``bwtmerge <command> ...``.

Exit codes: 0 success, 1 usage, 2 I/O failure, 3 invalid data or failed verification.
"""

from __future__ import annotations

import argparse
import resource
import sys
import time
from typing import Sequence

from . import fmi
from .build import bwt_from_collection
from .errors import BwtError
from .io import load_index, read_collection, save_index
from .merge import MergeConfig, MergeStats, merge_collections

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DATA = 3

_SUFFIXES = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _size(text: str) -> int:
    """Positive integer with an optional k/m/g (binary) suffix."""
    text = text.strip().lower().removesuffix("ib").removesuffix("b")
    scale = 1
    if text and text[-1] in _SUFFIXES:
        scale = _SUFFIXES[text[-1]]
        text = text[:-1]
    try:
        value = int(text) * scale
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _peak_rss_bytes() -> int:
    """High-water resident size of this process image (not inherited across exec)."""
    try:
        with open("/proc/self/status") as f:
            for line in f:
                if line.startswith("VmHWM:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _mib(n: int) -> str:
    return f"{n / (1 << 20):.2f} MiB"


def cmd_build(args) -> int:
    collection = read_collection(args.input, args.alphabet)
    bwt = bwt_from_collection(collection)
    size = save_index(bwt, args.output)
    print(f"n={bwt.n} m={bwt.m} runs={bwt.run_count} bytes={size}")
    return EXIT_OK


def _config(args) -> MergeConfig:
    config = MergeConfig(temp_dir=args.temp_dir)
    for flag, name in (("run_buffer", "run_buffer_pairs"), ("thread_buffer", "thread_buffer_bytes"),
                       ("merge_buffers", "merge_buffers"), ("threads", "threads"),
                       ("kmers", "verify_kmer_count"), ("kmer_length", "verify_kmer_length")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, name, value)
    return config


def _verify(merged, parts, config: MergeConfig, seed: int) -> int:
    kmers = fmi.sample_kmers(merged, config.verify_kmer_count, config.verify_kmer_length, seed)
    report = fmi.verify_against(merged, parts, kmers)
    print(f"verify: {report.checked} k-mers checked, {len(report.mismatches)} mismatches")
    for kmer, got, want in report.mismatches[:10]:
        print(f"  {kmer}: merged {got}, parts {want}")
    return EXIT_OK if report.ok else EXIT_DATA


def cmd_merge(args) -> int:
    if len(args.inputs) < 2:
        raise UsageError("merge needs at least two input indexes")
    config = _config(args)
    t0 = time.perf_counter()
    parts = [load_index(p) for p in args.inputs]
    t1 = time.perf_counter()
    stats = MergeStats()
    merged = merge_collections(parts, config, stats)
    t2 = time.perf_counter()
    status = EXIT_OK
    if args.verify:
        status = _verify(merged, parts, config, args.seed)
        if status != EXIT_OK:
            return status
    size = save_index(merged, args.output)
    t3 = time.perf_counter()
    payload = sum(p.payload_size for p in parts)
    print(f"n={merged.n} m={merged.m} runs={merged.run_count} bytes={size}")
    print(f"load: {t1 - t0:.3f} s")
    print(f"search: {stats.search_seconds:.3f} s")
    print(f"interleave: {stats.interleave_seconds:.3f} s")
    print(f"write: {t3 - t2:.3f} s")
    print(f"spill files: {stats.spill_files}")
    print(f"peak temp disk: {stats.peak_temp_bytes} bytes ({_mib(stats.peak_temp_bytes)})")
    print(f"input payload: {payload} bytes")
    print(f"peak rss: {_peak_rss_bytes()} bytes ({_mib(_peak_rss_bytes())})")
    return status


def cmd_stats(args) -> int:
    bwt = load_index(args.index)
    print(f"alphabet={bwt.alphabet.chars}")
    print(f"n={bwt.n}")
    print(f"m={bwt.m}")
    print("counts=" + " ".join(str(c) for c in bwt.counts))
    print(f"runs={bwt.run_count}")
    print(f"blocks={bwt.block_count}")
    print(f"payload_bytes={bwt.payload_size}")
    print(f"index_bytes={bwt.index_nbytes()}")
    return EXIT_OK


def cmd_count(args) -> int:
    patterns = list(args.patterns)
    if args.pattern_file:
        with open(args.pattern_file) as f:
            patterns.extend(line.strip() for line in f if line.strip())
    if not patterns:
        raise UsageError("no patterns given")
    bwt = load_index(args.index)
    for p in patterns:
        print(f"{p}\t{fmi.count(bwt, p).count}")
    return EXIT_OK


def cmd_extract(args) -> int:
    bwt = load_index(args.index)
    for text_id in args.text_ids:
        print(fmi.extract(bwt, text_id))
    return EXIT_OK


def cmd_export(args) -> int:
    text = load_index(args.index).to_text()
    if args.output in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(args.output, "w") as f:
            f.write(text + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _config(args)
    merged = load_index(args.merged)
    parts = [load_index(p) for p in args.parts]
    return _verify(merged, parts, config, args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bwtmerge", description="Build, merge and query run-length BWT indexes of read collections.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="index a read file (plain or FASTA)")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--alphabet", choices=("acgtn", "acgnt"), default="acgtn")
    p.set_defaults(func=cmd_build)

    kmer_flags = argparse.ArgumentParser(add_help=False)
    kmer_flags.add_argument("--kmers", type=_positive, help="number of random k-mers to check")
    kmer_flags.add_argument("--kmer-length", type=_positive)
    kmer_flags.add_argument("--seed", type=_seed, default=0)
    kmer_flags.add_argument("--temp-dir", default=None)

    p = sub.add_parser("merge", help="merge indexes in the given order", parents=[kmer_flags])
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--run-buffer", type=_size, help="run buffer capacity in pairs")
    p.add_argument("--thread-buffer", type=_size, help="thread buffer capacity in bytes")
    p.add_argument("--merge-buffers", type=_positive, help="number of merge buffers")
    p.add_argument("--threads", type=_positive)
    p.add_argument("--verify", action="store_true", help="check random k-mer counts against the inputs")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("stats", help="print index statistics")
    p.add_argument("index")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("count", help="count pattern occurrences")
    p.add_argument("index")
    p.add_argument("patterns", nargs="*")
    p.add_argument("-f", "--pattern-file")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("extract", help="print reads by 1-based id")
    p.add_argument("index")
    p.add_argument("text_ids", nargs="+", type=int)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("export", help="write the BWT as $ACGTN text")
    p.add_argument("index")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("verify", help="compare k-mer counts of a merged index with its parts",
                       parents=[kmer_flags])
    p.add_argument("merged")
    p.add_argument("parts", nargs="+")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bwtmerge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bwtmerge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BwtError, ValueError) as exc:
        print(f"bwtmerge: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
