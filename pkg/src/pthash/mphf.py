"""The queryable minimal perfect hash function and its binary format.

File layout (little-endian)::

    "PTHS" | u8 version | u8 encoder id | u8 key type | u8 reserved
    u64 seed | u64 n | u64 n_prime | u64 m | u64 p2
    u8 scheme tag | pilot payload
    free-slot payload (Elias-Fano)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from numba import njit

from .bits import ByteReader, EliasFano, ef_get
from .encoders import SCHEME_IDS, Encoding, read_encoding, write_encoding
from .errors import BadMagicError, FormatError, UnsupportedVersionError
from .hashing import (
    KEY_BYTES,
    KEY_U64,
    BucketParams,
    bucket_kernel,
    bucket_of,
    hash_key,
    hash_keys,
    hash_pilot,
    mix64,
    position,
    seed_key,
)

MAGIC = b"PTHS"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBQQQQQ")
HEADER_BITS = 8 * _HEADER.size


@njit
def _evaluate_kernel(keys, prehashed, seed, n, n_prime, p1, p2, m,
                     front, front_data, back, back_data, split, free_data, out):
    sk = seed_key(seed)
    npr = np.uint64(n_prime)
    for j in range(keys.size):
        h = keys[j] if prehashed else mix64(keys[j] ^ sk)
        b = bucket_kernel(h, n_prime, p1, p2, m)
        if b < split:
            k = front(front_data, b)
        else:
            k = back(back_data, b - split)
        p = np.int64((h ^ mix64(k ^ sk)) % npr)
        if p >= n:
            p = np.int64(ef_get(free_data, p - n))
        out[j] = p


OUT_OF_RANGE = 1
COLLISION = 2


@njit(cache=True)
def _first_violation(values, n):
    seen = np.zeros((n + 63) // 64, np.uint64)
    for j in range(values.size):
        p = values[j]
        if p < 0 or p >= n:
            return j, OUT_OF_RANGE
        bit = np.uint64(1) << np.uint64(p & 63)
        if seen[p >> 6] & bit:
            return j, COLLISION
        seen[p >> 6] |= bit
    return -1, 0


class Mphf:
    """Bijection from the construction key set onto ``range(n)``.

    Keys outside the construction set map to some arbitrary value in
    ``range(n)``; there is no membership test.
    """

    def __init__(self, seed: int, n: int, params: BucketParams, pilots: Encoding,
                 free: EliasFano, key_kind: int = KEY_U64):
        self.seed = seed
        self.n = n
        self.params = params
        self.pilots = pilots
        self.free = free
        self.key_kind = key_kind

    @property
    def n_prime(self) -> int:
        return self.params.n_prime

    @property
    def encoder(self) -> str:
        return self.pilots.name

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return (f"Mphf(n={self.n}, n_prime={self.n_prime}, m={self.params.m}, "
                f"encoder={self.encoder}, bits_per_key={self.bits_per_key():.3f})")

    def evaluate(self, key) -> int:
        h = hash_key(key, self.seed)
        k = self.pilots.access(bucket_of(h, self.params))
        p = position(h, hash_pilot(k, self.seed), self.n_prime)
        return p if p < self.n else self.free.access(p - self.n)

    __call__ = evaluate

    def evaluate_many(self, keys, out: np.ndarray | None = None) -> np.ndarray:
        """Vectorized lookup; integer keys are hashed inside the compiled loop."""
        if self.key_kind == KEY_U64 and isinstance(keys, np.ndarray) and keys.dtype.kind in "iu":
            arr, prehashed = np.ascontiguousarray(keys, dtype=np.uint64), False
        else:
            arr, prehashed = hash_keys(keys, self.seed, self.key_kind), True
        if out is None:
            out = np.empty(arr.size, dtype=np.int64)
        p = self.params
        front, front_data, back, back_data, split = self.pilots.routes()
        _evaluate_kernel(arr, prehashed, np.uint64(self.seed), self.n, p.n_prime, p.p1, p.p2, p.m,
                         front, front_data, back, back_data, split, self.free.kernel_data(), out)
        return out

    def first_violation(self, keys) -> tuple[int, str] | None:
        """``(index, "collision" | "out-of-range")`` of the first key breaking bijectivity, else None.

        Only meaningful when ``keys`` has exactly ``n`` entries.
        """
        j, kind = _first_violation(self.evaluate_many(keys), self.n)
        if j < 0:
            return None
        return int(j), "collision" if kind == COLLISION else "out-of-range"

    def num_bits(self) -> int:
        return HEADER_BITS + 8 + self.pilots.num_bits() + self.free.num_bits()

    def bits_per_key(self) -> float:
        return self.num_bits() / self.n

    def space_breakdown(self) -> dict:
        return {"header": HEADER_BITS, "pilots": 8 + self.pilots.num_bits(), "free": self.free.num_bits()}

    # -- serialization

    def serialize(self) -> bytes:
        p = self.params
        out = bytearray(_HEADER.pack(MAGIC, VERSION, SCHEME_IDS[self.encoder], self.key_kind, 0,
                                     self.seed, self.n, p.n_prime, p.m, p.p2))
        write_encoding(self.pilots, out)
        self.free.write(out)
        return bytes(out)

    @classmethod
    def deserialize(cls, data) -> Mphf:
        reader = ByteReader(data)
        if len(reader.buf) >= 4 and bytes(reader.buf[:4]) != MAGIC:
            raise BadMagicError(f"bad magic {bytes(reader.buf[:4])!r}, expected {MAGIC!r}")
        magic, version, encoder_id, key_kind, _, seed, n, n_prime, m, p2 = _HEADER.unpack(
            reader.take(_HEADER.size))
        if version != VERSION:
            raise UnsupportedVersionError(f"format version {version} not supported (expected {VERSION})")
        if key_kind not in (KEY_U64, KEY_BYTES):
            raise FormatError(f"unknown key type tag {key_kind}")
        params = BucketParams.create(n_prime, m)
        if params.p2 != p2:
            raise FormatError(f"stored split {p2} disagrees with bucket count {m}")
        pilots = read_encoding(reader)
        if SCHEME_IDS[pilots.name] != encoder_id or len(pilots) != m:
            raise FormatError("pilot payload does not match header")
        free = EliasFano.read(reader)
        if len(free) != n_prime - n:
            raise FormatError("free-slot payload does not match header")
        if not reader.at_end():
            raise FormatError(f"{len(reader.buf) - reader.pos} trailing bytes")
        return cls(seed, n, params, pilots, free, key_kind)

    def save(self, path) -> None:
        Path(path).write_bytes(self.serialize())

    @classmethod
    def load(cls, path) -> Mphf:
        return cls.deserialize(Path(path).read_bytes())


def bits_per_key(f: Mphf) -> float:
    return f.bits_per_key()
