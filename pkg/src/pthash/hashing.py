"""Seeded 64-bit hashing and the skewed key-to-bucket mapping.

Hash choice (part of the on-disk contract, do not change):

* 64-bit integer keys and pilots: ``mix64(x ^ mix64(seed ^ GOLDEN))`` where
  ``mix64`` is the SplitMix64 finalizer.  For a fixed seed this is a bijection
  on 64-bit integers, so distinct integer keys never share a hash.
* byte-string keys: XXH3-64 with the construction seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import xxhash
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

KEY_U64 = 0
KEY_BYTES = 1


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def seed_key(seed):
    return mix64(seed ^ np.uint64(0x9E3779B97F4A7C15))


@njit(cache=True)
def hash64(x, seed):
    return mix64(x ^ seed_key(seed))


@njit(cache=True)
def _hash_u64_array(keys, seed):
    out = np.empty(keys.size, np.uint64)
    sk = seed_key(seed)
    for i in range(keys.size):
        out[i] = mix64(keys[i] ^ sk)
    return out


@njit(cache=True)
def bucket_kernel(h, n_prime, p1, p2, m):
    if p2 == m or h % np.uint64(n_prime) < np.uint64(p1):
        return np.int64(h % np.uint64(p2))
    return p2 + np.int64(h % np.uint64(m - p2))


@njit(cache=True)
def _buckets_of(hashes, n_prime, p1, p2, m):
    out = np.empty(hashes.size, np.int64)
    for i in range(hashes.size):
        out[i] = bucket_kernel(hashes[i], n_prime, p1, p2, m)
    return out


def _mix64_py(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def key_kind(keys) -> int:
    """Classify a key collection as 64-bit integers or byte strings."""
    if isinstance(keys, np.ndarray):
        if keys.dtype.kind in "iu":
            return KEY_U64
        if keys.dtype.kind in "SO":
            return KEY_BYTES
        raise TypeError(f"unsupported key array dtype {keys.dtype}")
    for k in keys:
        return KEY_BYTES if isinstance(k, (bytes, bytearray, memoryview, str)) else KEY_U64
    return KEY_U64


def _as_bytes(key) -> bytes:
    return key.encode("utf-8") if isinstance(key, str) else bytes(key)


def hash_key(key, seed: int) -> int:
    """Hash one key (an int in [0, 2**64) or a byte/text string)."""
    seed &= MASK64
    if isinstance(key, (bytes, bytearray, memoryview, str)):
        return xxhash.xxh3_64_intdigest(_as_bytes(key), seed)
    return _mix64_py((int(key) & MASK64) ^ _mix64_py(seed ^ GOLDEN))


def hash_pilot(k: int, seed: int) -> int:
    return hash_key(int(k), seed)


def hash_keys(keys, seed: int, kind: int | None = None) -> np.ndarray:
    """Hash a whole key collection into a ``uint64`` array."""
    seed &= MASK64
    if kind is None:
        kind = key_kind(keys)
    if kind == KEY_U64:
        arr = np.asarray(keys)
        if arr.dtype == object or arr.dtype.kind not in "iu":
            arr = np.array([int(k) & MASK64 for k in keys], dtype=np.uint64)
        return _hash_u64_array(np.ascontiguousarray(arr, dtype=np.uint64).reshape(-1), np.uint64(seed))
    digest = xxhash.xxh3_64_intdigest
    return np.fromiter((digest(_as_bytes(k), seed) for k in keys), dtype=np.uint64, count=len(keys))


def table_size(n: int, alpha: float) -> int:
    """Search-table size: ``ceil(n / alpha)``, bumped off powers of two."""
    n_prime = max(math.ceil(n / alpha), n)
    if n_prime & (n_prime - 1) == 0:
        n_prime += 1
    return n_prime


def num_buckets(n: int, c: float) -> int:
    if n < 2:
        return 1
    return max(1, math.ceil(c * n / math.log2(n)))


@dataclass(frozen=True)
class BucketParams:
    n_prime: int
    m: int
    p1: int
    p2: int

    @classmethod
    def create(cls, n_prime: int, m: int) -> BucketParams:
        if n_prime < 1 or m < 1:
            raise ValueError("table size and bucket count must be positive")
        p1 = (6 * n_prime) // 10
        p2 = (3 * m) // 10 if m >= 4 else max(1, m - 1)
        return cls(n_prime, m, p1, p2)

    @classmethod
    def for_keys(cls, n: int, n_prime: int, c: float) -> BucketParams:
        return cls.create(n_prime, num_buckets(n, c))


def bucket_of(h: int, params: BucketParams) -> int:
    p = params
    # m == p2 only when m == 1: the second branch would divide by zero
    if p.p2 == p.m or h % p.n_prime < p.p1:
        return h % p.p2
    return p.p2 + h % (p.m - p.p2)


def buckets_of(hashes: np.ndarray, params: BucketParams) -> np.ndarray:
    p = params
    return _buckets_of(hashes, p.n_prime, p.p1, p.p2, p.m)


def position(h: int, pilot_hash: int, n_prime: int) -> int:
    return (h ^ pilot_hash) % n_prime
