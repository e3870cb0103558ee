"""Command-line front end: build, check, bench and stats.

Exit codes: 0 success, 1 build or verification failure, 2 usage error,
3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .builder import BuildConfig, build_detailed
from .encoders import CLI_NAMES
from .errors import BuildError, FormatError
from .mphf import Mphf

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class DuplicateKeyError(ValueError):
    pass


def random_keys(count: int, rng_seed: int) -> np.ndarray:
    """``count`` distinct uniform 64-bit integers; duplicates are redrawn."""
    rng = np.random.default_rng(rng_seed)
    keys = rng.integers(0, 1 << 64, size=count, dtype=np.uint64, endpoint=False)
    while True:
        _, first = np.unique(keys, return_index=True)
        if first.size == count:
            return keys
        repeat = np.ones(count, dtype=bool)
        repeat[first] = False
        keys[repeat] = rng.integers(0, 1 << 64, size=int(repeat.sum()), dtype=np.uint64, endpoint=False)


def file_keys(path) -> list[bytes]:
    """Newline-delimited keys as raw bytes, terminator excluded."""
    data = Path(path).read_bytes()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    seen = set()
    for i, line in enumerate(lines, 1):
        if line in seen:
            raise DuplicateKeyError(f"{path}: duplicate key {line!r} on line {i}")
        seen.add(line)
    return lines


def load_keys(args):
    if args.input_file is not None:
        return file_keys(args.input_file)
    return random_keys(args.num_keys, args.rng_seed)


def _config(args, c: float) -> BuildConfig:
    return BuildConfig(c=c, alpha=args.alpha, seed=args.seed, encoder=CLI_NAMES[args.encoder])


def _pick_seed(args) -> None:
    if args.seed is None:
        args.seed = random.getrandbits(64)
        print(f"seed: {args.seed} (random)")


def cmd_build(args) -> int:
    keys = load_keys(args)
    _pick_seed(args)
    t0 = time.perf_counter()
    result = build_detailed(keys, _config(args, args.c))
    total = time.perf_counter() - t0
    f = result.mphf
    if args.output is not None:
        f.save(args.output)
    phases = " ".join(f"{k}={v:.3f}s" for k, v in result.timings.items())
    print(f"n={f.n} n'={f.n_prime} m={result.params.m} encoder={f.encoder} "
          f"seed={result.seed} attempts={result.attempts}")
    print(f"time={total:.3f}s {phases}")
    print(f"bits/key={f.bits_per_key():.4f}")
    return EXIT_OK


def cmd_check(args) -> int:
    f = Mphf.load(args.mphf)
    keys = load_keys(args)
    if len(keys) != f.n:
        print(f"FAIL: {len(keys)} keys but the function covers {f.n}", file=sys.stderr)
        return EXIT_FAIL
    bad = f.first_violation(keys)
    if bad is not None:
        j, kind = bad
        key = keys[j] if isinstance(keys[j], bytes) else int(keys[j])
        print(f"FAIL: {kind} at key #{j} ({key!r} -> {f.evaluate(key)})", file=sys.stderr)
        return EXIT_FAIL
    print(f"OK: {f.n} keys map bijectively onto [0, {f.n})")
    return EXIT_OK


def cmd_bench(args) -> int:
    f = Mphf.load(args.mphf)
    keys = load_keys(args)
    out = np.empty(len(keys), dtype=np.int64)
    f.evaluate_many(keys[:1], out[:1])  # compile outside the timed loop
    sink = 0
    elapsed = []
    for _ in range(args.runs):
        t0 = time.perf_counter()
        f.evaluate_many(keys, out)
        elapsed.append(time.perf_counter() - t0)
        sink ^= int(np.bitwise_xor.reduce(out))
    ns = 1e9 * sum(elapsed) / (args.runs * len(keys))
    print(f"encoder={f.encoder} n={f.n} runs={args.runs} ns/key={ns:.2f} sink={sink}")
    return EXIT_OK


def cmd_stats(args) -> int:
    keys = load_keys(args)
    _pick_seed(args)
    out_dir = Path(args.csv_out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    entropy = []
    for c in args.c:
        result = build_detailed(keys, _config(args, c))
        stats = result.stats
        tag = f"c{c:g}"
        analysis.emit_csv(analysis.trial_profile(stats, result.bucketed), out_dir / f"trials_{tag}.csv")
        analysis.emit_csv(analysis.bucket_profile(stats), out_dir / f"buckets_{tag}.csv")
        analysis.emit_csv(analysis.search_time_profile(stats, args.with_times), out_dir / f"search_{tag}.csv")
        report = analysis.front_back_entropy(result.pilots, result.params.p2, c)
        entropy.append(report)
        print(f"c={c:g} H={report.H_all:.4f} front={report.H_front:.4f} back={report.H_back:.4f} "
              f"r={report.r} empty={stats.empty_fraction:.4f}")
    analysis.emit_csv(entropy, out_dir / "entropy.csv")
    print(f"wrote CSVs to {out_dir}")
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _seed(text: str) -> int:
    return int(text, 0)


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pthash", description="PTHash minimal perfect hashing")
    sub = ap.add_subparsers(dest="command", required=True)

    source = argparse.ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group(required=True)
    group.add_argument("-n", "--num-keys", type=_positive_int, help="number of random 64-bit keys")
    group.add_argument("-i", "--input-file", help="newline-delimited key file")
    source.add_argument("--rng-seed", type=int, default=0, help="seed of the random key generator")

    knobs = argparse.ArgumentParser(add_help=False)
    knobs.add_argument("-a", "--alpha", type=float, default=0.99)
    knobs.add_argument("-e", "--encoder", choices=list(CLI_NAMES), default="dd")
    knobs.add_argument("-s", "--seed", type=_seed, default=None, help="construction seed (random if omitted)")

    p = sub.add_parser("build", parents=[source, knobs], help="build and optionally save a function")
    p.add_argument("-c", type=float, default=7.0)
    p.add_argument("-o", "--output", help="where to write the serialized function")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", parents=[source], help="verify a saved function on its key set")
    p.add_argument("mphf")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", parents=[source], help="time lookups of every key")
    p.add_argument("mphf")
    p.add_argument("--runs", type=_positive_int, default=5)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", parents=[source, knobs], help="emit entropy and search-profile CSVs")
    p.add_argument("-c", type=float, nargs="+", default=[7.0])
    p.add_argument("--csv-out", default=".", help="output directory")
    p.add_argument("--with-times", action="store_true",
                   help="add wall-clock columns to the search CSV (not reproducible)")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    ap = parser()
    args = ap.parse_args(argv)
    try:
        if hasattr(args, "alpha"):
            for c in args.c if isinstance(args.c, list) else [args.c]:
                _config(args, c)
    except ValueError as exc:
        ap.error(str(exc))
    try:
        return args.func(args)
    except (BuildError, DuplicateKeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FormatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
