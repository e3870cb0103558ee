"""Construction: map keys to buckets, order them, search pilots, fill holes."""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bits import BitVector, EliasFano
from .encoders import SCHEMES, encode
from .errors import BuildError, SeedFailure
from .hashing import (
    MASK64,
    BucketParams,
    bucket_kernel,
    hash_keys,
    key_kind,
    mix64,
    seed_key,
    table_size,
)

log = logging.getLogger(__name__)

LOG2_E = math.log2(math.e)
DEFAULT_PILOT_CAP = 1 << 26
DEFAULT_SEED_ATTEMPTS = 64


@dataclass
class BuildConfig:
    c: float = 7.0
    alpha: float = 0.99
    seed: int | None = None
    encoder: str = "D-D"
    pilot_cap: int = DEFAULT_PILOT_CAP
    max_seed_attempts: int = DEFAULT_SEED_ATTEMPTS
    stats_chunks: int = 100

    def __post_init__(self):
        if not self.c > LOG2_E:
            raise ValueError(f"c must exceed log2(e) ~ {LOG2_E:.4f}, got {self.c}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.encoder not in SCHEMES:
            raise ValueError(f"unknown encoder {self.encoder!r}; choose from {', '.join(SCHEMES)}")
        if self.pilot_cap < 0 or self.max_seed_attempts < 1:
            raise ValueError("pilot_cap must be >= 0 and max_seed_attempts >= 1")
        if self.seed is not None:
            self.seed &= MASK64


@dataclass
class BucketedHashes:
    """Key hashes grouped by bucket.

    ``hashes[offsets[b]:offsets[b + 1]]`` are the hashes of bucket ``b``.
    """

    hashes: np.ndarray
    offsets: np.ndarray
    sizes: np.ndarray
    order: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.sizes.size

    def bucket(self, b: int) -> np.ndarray:
        return self.hashes[self.offsets[b]:self.offsets[b + 1]]


@dataclass
class SearchStats:
    """Diagnostics of one search, indexed by processing position."""

    trials: np.ndarray          # pilot + 1 for non-empty buckets, 0 for empty ones
    loads: np.ndarray           # load factor of the table before each bucket
    sizes: np.ndarray           # bucket size at each processing position
    chunk_bounds: np.ndarray    # processing positions delimiting timed chunks
    chunk_seconds: np.ndarray
    n_prime: int = 0

    @property
    def empty_fraction(self) -> float:
        return float(np.mean(self.sizes == 0)) if self.sizes.size else 0.0


@njit(cache=True)
def _group_by_bucket(hashes, n_prime, p1, p2, m):
    """Counting sort of hashes by bucket; also returns -1 or a bucket holding a duplicate hash."""
    sizes = np.zeros(m, np.int64)
    buckets = np.empty(hashes.size, np.int64)
    for i in range(hashes.size):
        b = bucket_kernel(hashes[i], n_prime, p1, p2, m)
        buckets[i] = b
        sizes[b] += 1
    offsets = np.zeros(m + 1, np.int64)
    for b in range(m):
        offsets[b + 1] = offsets[b] + sizes[b]
    fill = offsets[:-1].copy()
    grouped = np.empty(hashes.size, np.uint64)
    for i in range(hashes.size):
        b = buckets[i]
        grouped[fill[b]] = hashes[i]
        fill[b] += 1
    for b in range(m):
        for i in range(offsets[b] + 1, offsets[b + 1]):
            for j in range(offsets[b], i):
                if grouped[i] == grouped[j]:
                    return grouped, offsets, sizes, b
    return grouped, offsets, sizes, -1


def map_keys(keys, seed: int, params: BucketParams, kind: int | None = None) -> BucketedHashes:
    """Hash every key and group the hashes by bucket.

    Raises SeedFailure when two keys of one bucket share a 64-bit hash; for
    integer keys that only happens when the keys themselves are equal.
    """
    hashes = hash_keys(keys, seed, kind)
    p = params
    grouped, offsets, sizes, dup = _group_by_bucket(hashes, p.n_prime, p.p1, p.p2, p.m)
    if dup >= 0:
        raise SeedFailure(f"duplicate hash inside bucket {dup}", seed)
    return BucketedHashes(grouped, offsets, sizes)


@njit(cache=True)
def _order_by_size(sizes):
    # counting sort: descending size, ascending index within a size
    top = 0
    for s in sizes:
        top = max(top, s)
    first = np.zeros(top + 2, np.int64)
    for s in sizes:
        first[top - s + 1] += 1
    for i in range(1, top + 2):
        first[i] += first[i - 1]
    out = np.empty(sizes.size, np.int64)
    for b in range(sizes.size):
        slot = top - sizes[b]
        out[first[slot]] = b
        first[slot] += 1
    return out


def order(b: BucketedHashes | np.ndarray) -> np.ndarray:
    """Buckets by non-increasing size, ties by ascending bucket index."""
    sizes = b.sizes if isinstance(b, BucketedHashes) else np.asarray(b)
    return _order_by_size(np.ascontiguousarray(sizes, dtype=np.int64))


def expected_pilot(load: float, size: int) -> float:
    """Mean pilot of a bucket of ``size`` keys placed into a table at ``load``."""
    if not 0 <= load < 1:
        raise ValueError(f"load must be in [0, 1), got {load}")
    return (1.0 / (1.0 - load)) ** size - 1.0


@njit(cache=True)
def _lay_out(hashes, offsets, proc):
    """Copy bucket contents into processing order; returns hashes and offsets."""
    out = np.empty(hashes.size, np.uint64)
    starts = np.empty(proc.size + 1, np.int64)
    pos = 0
    for j in range(proc.size):
        b = proc[j]
        starts[j] = pos
        for i in range(offsets[b], offsets[b + 1]):
            out[pos] = hashes[i]
            pos += 1
    starts[proc.size] = pos
    return out, starts


@njit(cache=True)
def _search_range(hashes, starts, proc, start, stop, taken, n_prime, seed, pilot_cap, pilots, scratch):
    sk = seed_key(seed)
    npr = np.uint64(n_prime)
    for j in range(start, stop):
        lo = starts[j]
        size = starts[j + 1] - lo
        if size == 0:
            pilots[proc[j]] = 0
            continue
        k = 0
        while True:
            ph = mix64(np.uint64(k) ^ sk)
            ok = True
            for t in range(size):
                p = np.int64((hashes[lo + t] ^ ph) % npr)
                if (taken[p >> 6] >> np.uint64(p & 63)) & np.uint64(1):
                    ok = False
                    break
                for u in range(t):
                    if scratch[u] == p:
                        ok = False
                        break
                if not ok:
                    break
                scratch[t] = p
            if ok:
                break
            k += 1
            if k > pilot_cap:
                return j
        pilots[proc[j]] = k
        for t in range(size):
            p = scratch[t]
            taken[p >> 6] |= np.uint64(1) << np.uint64(p & 63)
    return -1


def search(b: BucketedHashes, n_prime: int, cfg: BuildConfig, seed: int | None = None):
    """Find the smallest working pilot for every bucket, in processing order.

    Returns ``(pilots, taken, stats)``; raises SeedFailure when some bucket
    exhausts ``cfg.pilot_cap``.
    """
    seed = cfg.seed if seed is None else seed
    if seed is None:
        raise ValueError("a seed is required")
    if int(b.sizes.sum()) > n_prime:
        raise ValueError("more keys than table slots")
    proc = b.order if b.order is not None else order(b)
    m = b.m
    hashes, starts = _lay_out(b.hashes, b.offsets, proc)
    taken = BitVector(n_prime)
    pilots = np.zeros(m, dtype=np.int64)
    scratch = np.zeros(max(1, int(b.sizes.max(initial=0))), dtype=np.int64)
    chunks = max(1, min(cfg.stats_chunks, m))
    bounds = np.linspace(0, m, chunks + 1).round().astype(np.int64)
    seconds = np.zeros(chunks)
    for c in range(chunks):
        t0 = time.perf_counter()
        failed = _search_range(hashes, starts, proc, bounds[c], bounds[c + 1], taken.words,
                               n_prime, np.uint64(seed), cfg.pilot_cap, pilots, scratch)
        seconds[c] = time.perf_counter() - t0
        if failed >= 0:
            raise SeedFailure(f"bucket {proc[failed]} exceeded pilot cap {cfg.pilot_cap}", seed)

    sizes = b.sizes[proc]
    loads = np.concatenate(([0], np.cumsum(sizes)[:-1])) / n_prime
    trials = np.where(sizes > 0, pilots[proc] + 1, 0)
    stats = SearchStats(trials, loads, sizes, bounds, seconds, n_prime)
    return pilots, taken, stats


def fill_free(taken: BitVector, n: int, n_prime: int) -> EliasFano:
    """Re-rank slots at or beyond ``n`` into the holes left below ``n``.

    Entry ``p - n`` of the result holds the hole assigned to taken slot ``p``.
    Entries for untaken slots repeat the previous assignment (0 before the
    first one) so the sequence stays monotone for Elias-Fano.
    """
    if n_prime == n:
        return EliasFano.from_values([])
    bits = taken.to_bools()
    assert int(bits.sum()) == n, "taken bitmap popcount must equal the key count"
    holes = np.flatnonzero(~bits[:n])
    tail = np.flatnonzero(bits[n:])
    assert holes.size == tail.size
    marker = np.full(n_prime - n, -1, dtype=np.int64)
    marker[tail] = tail
    last = np.maximum.accumulate(marker)
    values = np.zeros(n_prime - n, dtype=np.int64)
    values[tail] = holes
    filled = np.where(last >= 0, values[np.maximum(last, 0)], 0)
    return EliasFano.from_values(filled, universe=n)


@dataclass
class BuildResult:
    config: BuildConfig
    params: BucketParams
    n: int
    seed: int
    key_kind: int
    pilots: np.ndarray
    free: EliasFano
    bucketed: BucketedHashes
    stats: SearchStats
    attempts: int
    timings: dict = field(default_factory=dict)
    mphf: object = None

    def encode(self, scheme: str):
        """The same function with its pilots table in another encoding."""
        from .mphf import Mphf

        pilots = encode(self.pilots, scheme, self.params.p2)
        return Mphf(self.seed, self.n, self.params, pilots, self.free, self.key_kind)


def build_detailed(keys, cfg: BuildConfig | None = None) -> BuildResult:
    cfg = cfg or BuildConfig()
    kind = key_kind(keys)
    n = len(keys)
    if n == 0:
        raise BuildError("cannot build over an empty key set")
    n_prime = table_size(n, cfg.alpha)
    params = BucketParams.for_keys(n, n_prime, cfg.c)
    seed = cfg.seed if cfg.seed is not None else random.getrandbits(64)

    timings = {"map": 0.0, "order": 0.0, "search": 0.0}
    map_failures = 0
    for attempt in range(1, cfg.max_seed_attempts + 1):
        try:
            t0 = time.perf_counter()
            bucketed = map_keys(keys, seed, params, kind)
            t1 = time.perf_counter()
            bucketed.order = order(bucketed)
            t2 = time.perf_counter()
            timings["map"] += t1 - t0
            timings["order"] += t2 - t1
            try:
                pilots, taken, stats = search(bucketed, n_prime, cfg, seed)
            finally:
                timings["search"] += time.perf_counter() - t2
            break
        except SeedFailure as exc:
            map_failures += exc.reason.startswith("duplicate")
            log.info("seed attempt %d failed: %s", attempt, exc)
            seed = (seed + 1) & MASK64
    else:
        if map_failures == cfg.max_seed_attempts:
            raise BuildError(f"duplicate keys suspected: every one of {map_failures} seeds "
                             "produced an in-bucket hash collision")
        raise BuildError(f"no seed worked after {cfg.max_seed_attempts} attempts")

    t0 = time.perf_counter()
    free = fill_free(taken, n, n_prime)
    t1 = time.perf_counter()
    result = BuildResult(cfg, params, n, seed, kind, pilots, free, bucketed, stats, attempt)
    result.mphf = result.encode(cfg.encoder)
    timings["free"] = t1 - t0
    timings["encode"] = time.perf_counter() - t1
    result.timings = timings
    return result


def build(keys, cfg: BuildConfig | None = None):
    """Build a minimal perfect hash function over distinct ``keys``."""
    return build_detailed(keys, cfg).mphf
