"""Bit-level containers: bitvector, fixed-width vector, Elias-Fano, dense codes.

All containers keep their payload in little-endian 64-bit words: bit ``i`` of
word ``w`` is ``(w >> i) & 1``.  Random access goes through small numba
kernels of the form ``kernel(data, i)`` so that lookups can be fused into
compiled loops elsewhere (see :mod:`pthash.mphf`).
"""

from __future__ import annotations

import struct

import numpy as np
from numba import njit

from .errors import FormatError, TruncationError

WORD_BITS = 64
SELECT_SAMPLE = 1024  # one select sample per this many ones


def num_words(nbits: int) -> int:
    return (nbits + WORD_BITS - 1) // WORD_BITS


def bit_width(x: int) -> int:
    """Bits needed to write ``x`` in binary, never less than one."""
    return max(1, int(x).bit_length())


# ---------------------------------------------------------------- kernels


@njit(cache=True)
def popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def select_in_word(w, r):
    """Position of the ``r``-th (0-based) set bit of ``w``."""
    shift = 0
    while True:
        c = np.int64(popcount64(w & np.uint64(0xFF)))
        if r < c:
            break
        r -= c
        w = w >> np.uint64(8)
        shift += 8
    for _ in range(r):
        w = w & (w - np.uint64(1))
    low = w & (~w + np.uint64(1))
    return shift + np.int64(popcount64(low - np.uint64(1)))


@njit(cache=True)
def read_bits(words, pos, width):
    if width == 0:
        return np.uint64(0)
    w = pos >> 6
    off = pos & 63
    v = words[w] >> np.uint64(off)
    if off + width > 64:
        v |= words[w + 1] << np.uint64(64 - off)
    if width < 64:
        v &= (np.uint64(1) << np.uint64(width)) - np.uint64(1)
    return v


@njit(cache=True)
def write_bits(words, pos, value, width):
    # destination bits must be zero
    if width == 0:
        return
    w = pos >> 6
    off = pos & 63
    words[w] |= value << np.uint64(off)
    if off + width > 64:
        words[w + 1] |= value >> np.uint64(64 - off)


@njit(cache=True)
def _pack_fixed(values, width, out):
    for i in range(values.size):
        write_bits(out, i * width, values[i], width)


@njit(cache=True)
def _unpack_fixed(words, width, n):
    out = np.empty(n, np.uint64)
    for i in range(n):
        out[i] = read_bits(words, i * width, width)
    return out


@njit(cache=True)
def compact_get(data, i):
    return read_bits(data[0], i * data[1], data[1])


@njit(cache=True)
def _set_positions(words, positions):
    for p in positions:
        words[p >> 6] |= np.uint64(1) << np.uint64(p & 63)


@njit(cache=True)
def select1(high, samples, i):
    s = i // 1024
    pos = np.int64(samples[s])
    r = i - s * 1024
    wi = pos >> 6
    w = high[wi] & (np.uint64(0xFFFFFFFFFFFFFFFF) << np.uint64(pos & 63))
    while True:
        c = np.int64(popcount64(w))
        if r < c:
            return wi * 64 + select_in_word(w, r)
        r -= c
        wi += 1
        w = high[wi]


@njit(cache=True)
def _next_one(high, pos):
    """First set bit at a position > ``pos``."""
    pos += 1
    wi = pos >> 6
    w = high[wi] & (np.uint64(0xFFFFFFFFFFFFFFFF) << np.uint64(pos & 63))
    while w == 0:
        wi += 1
        w = high[wi]
    low = w & (~w + np.uint64(1))
    return wi * 64 + np.int64(popcount64(low - np.uint64(1)))


@njit(cache=True)
def ef_get(data, i):
    low, lw, high, samples = data
    hi = np.uint64(select1(high, samples, i) - i)
    return (hi << np.uint64(lw)) | read_bits(low, i * lw, lw)


@njit(cache=True)
def ef_get_pair(data, i):
    """Elements ``i`` and ``i + 1`` with a single select."""
    low, lw, high, samples = data
    p = select1(high, samples, i)
    q = _next_one(high, p)
    a = (np.uint64(p - i) << np.uint64(lw)) | read_bits(low, i * lw, lw)
    b = (np.uint64(q - i - 1) << np.uint64(lw)) | read_bits(low, (i + 1) * lw, lw)
    return a, b


@njit(cache=True)
def _ef_decode_all(low, lw, high, n):
    out = np.empty(n, np.uint64)
    k = 0
    for wi in range(high.size):
        w = high[wi]
        while w != 0 and k < n:
            lowbit = w & (~w + np.uint64(1))
            p = wi * 64 + np.int64(popcount64(lowbit - np.uint64(1)))
            out[k] = (np.uint64(p - k) << np.uint64(lw)) | read_bits(low, k * lw, lw)
            k += 1
            w &= w - np.uint64(1)
    return out


@njit(cache=True)
def _dense_lengths(values):
    n = values.size
    starts = np.empty(n + 1, np.uint64)
    total = 0
    for i in range(n):
        starts[i] = total
        v = values[i] + np.uint64(1)
        ln = 0
        while (v >> np.uint64(ln + 1)) != 0:
            ln += 1
        total += ln
    starts[n] = total
    return starts


@njit(cache=True)
def _dense_pack(values, starts, words):
    for i in range(values.size):
        ln = np.int64(starts[i + 1] - starts[i])
        v = values[i] + np.uint64(1)
        if ln > 0:
            write_bits(words, np.int64(starts[i]), v - (np.uint64(1) << np.uint64(ln)), ln)


@njit(cache=True)
def dense_get(data, i):
    codes, low, lw, high, samples = data
    a, b = ef_get_pair((low, lw, high, samples), i)
    ln = np.int64(b - a)
    if ln == 0:
        return np.uint64(0)
    return (np.uint64(1) << np.uint64(ln)) + read_bits(codes, np.int64(a), ln) - np.uint64(1)


@njit
def gather(kernel, data, idx):
    out = np.empty(idx.size, np.uint64)
    for j in range(idx.size):
        out[j] = kernel(data, np.int64(idx[j]))
    return out


# ---------------------------------------------------------- serialization


class ByteReader:
    """Cursor over a bytes-like object; every read is bounds-checked."""

    def __init__(self, data, offset: int = 0):
        self.buf = memoryview(data).cast("B")
        self.pos = offset

    def take(self, nbytes: int) -> memoryview:
        end = self.pos + nbytes
        if nbytes < 0 or end > len(self.buf):
            raise TruncationError(f"need {nbytes} bytes at offset {self.pos}, have {len(self.buf) - self.pos}")
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def words(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<u8").astype(np.uint64)

    def at_end(self) -> bool:
        return self.pos == len(self.buf)


def _put_u64(out: bytearray, *values: int) -> None:
    out += struct.pack(f"<{len(values)}Q", *values)


def _put_words(out: bytearray, words: np.ndarray) -> None:
    out += words.astype("<u8", copy=False).tobytes()


def _as_u64_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        arr = np.array([int(v) for v in arr], dtype=np.uint64)
    if arr.size and arr.dtype.kind == "i" and arr.min() < 0:
        raise ValueError("values must be non-negative")
    return np.ascontiguousarray(arr, dtype=np.uint64).reshape(-1)


# ------------------------------------------------------------- containers


class BitVector:
    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray | None = None):
        self.length = int(length)
        if words is None:
            words = np.zeros(num_words(self.length), dtype=np.uint64)
        self.words = words

    @classmethod
    def from_bools(cls, bits) -> BitVector:
        bits = np.asarray(bits, dtype=bool)
        bv = cls(bits.size)
        _set_positions(bv.words, np.flatnonzero(bits).astype(np.int64))
        return bv

    def __len__(self) -> int:
        return self.length

    def get(self, i: int) -> int:
        assert 0 <= i < self.length, "bit index out of range"
        return int(self.words[i >> 6] >> np.uint64(i & 63)) & 1

    __getitem__ = get

    def set(self, i: int, bit: int = 1) -> None:
        assert 0 <= i < self.length, "bit index out of range"
        mask = np.uint64(1 << (i & 63))
        if bit:
            self.words[i >> 6] |= mask
        else:
            self.words[i >> 6] &= ~mask

    def clear(self, i: int) -> None:
        self.set(i, 0)

    def count_ones(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def to_bools(self) -> np.ndarray:
        raw = np.unpackbits(self.words.astype("<u8").view(np.uint8), bitorder="little")
        return raw[: self.length].astype(bool)

    def num_bits(self) -> int:
        return 64 + 64 * self.words.size

    def write(self, out: bytearray) -> None:
        _put_u64(out, self.length)
        _put_words(out, self.words)

    @classmethod
    def read(cls, reader: ByteReader) -> BitVector:
        length = reader.u64()
        return cls(length, reader.words(num_words(length)))


class CompactVector:
    """Fixed-width packed unsigned integers."""

    __slots__ = ("length", "width", "words")
    kernel = staticmethod(compact_get)

    def __init__(self, length: int, width: int, words: np.ndarray):
        self.length = int(length)
        self.width = int(width)
        self.words = words

    @classmethod
    def from_values(cls, values, width: int | None = None) -> CompactVector:
        arr = _as_u64_array(values)
        top = int(arr.max()) if arr.size else 0
        if width is None:
            width = bit_width(top)
        if not 1 <= width <= 64:
            raise ValueError(f"width must be in 1..64, got {width}")
        if top.bit_length() > width:
            raise ValueError(f"value {top} does not fit in {width} bits")
        words = np.zeros(num_words(arr.size * width), dtype=np.uint64)
        _pack_fixed(arr, width, words)
        return cls(arr.size, width, words)

    def __len__(self) -> int:
        return self.length

    def kernel_data(self):
        return (self.words, self.width)

    def access(self, i: int) -> int:
        assert 0 <= i < self.length, "index out of range"
        return int(compact_get(self.kernel_data(), i))

    __getitem__ = access

    def to_numpy(self) -> np.ndarray:
        return _unpack_fixed(self.words, self.width, self.length)

    def num_bits(self) -> int:
        return 128 + 64 * self.words.size

    def write(self, out: bytearray) -> None:
        _put_u64(out, self.length, self.width)
        _put_words(out, self.words)

    @classmethod
    def read(cls, reader: ByteReader) -> CompactVector:
        length, width = reader.u64(), reader.u64()
        if not 1 <= width <= 64:
            raise FormatError(f"corrupt compact vector width {width}")
        return cls(length, width, reader.words(num_words(length * width)))


class EliasFano:
    """Non-decreasing integer sequence in Elias-Fano form with sampled select."""

    __slots__ = ("length", "universe", "low_width", "low", "high", "samples")
    kernel = staticmethod(ef_get)

    def __init__(self, length, universe, low_width, low, high, samples):
        self.length = int(length)
        self.universe = int(universe)
        self.low_width = int(low_width)
        self.low = low
        self.high = high
        self.samples = samples

    @staticmethod
    def _low_width(length: int, universe: int) -> int:
        if length == 0 or universe <= length:
            return 0
        return (universe // length).bit_length() - 1

    @staticmethod
    def _high_bits(length: int, universe: int, low_width: int) -> int:
        return length + (universe >> low_width) + 1

    @classmethod
    def from_values(cls, values, universe: int | None = None) -> EliasFano:
        arr = _as_u64_array(values)
        n = arr.size
        if n > 1 and np.any(arr[1:] < arr[:-1]):
            raise ValueError("Elias-Fano input must be non-decreasing")
        last = int(arr[-1]) if n else -1
        if universe is None:
            universe = last + 1
        elif universe <= last:
            raise ValueError(f"universe {universe} must exceed the largest value {last}")
        lw = cls._low_width(n, universe)
        low = np.zeros(num_words(n * lw), dtype=np.uint64)
        if lw:
            _pack_fixed(arr & np.uint64((1 << lw) - 1), lw, low)
        high = np.zeros(num_words(cls._high_bits(n, universe, lw)), dtype=np.uint64)
        positions = (arr >> np.uint64(lw)).astype(np.int64) + np.arange(n, dtype=np.int64)
        _set_positions(high, positions)
        samples = positions[::SELECT_SAMPLE].astype(np.uint64)
        return cls(n, universe, lw, low, high, samples)

    def __len__(self) -> int:
        return self.length

    def kernel_data(self):
        return (self.low, self.low_width, self.high, self.samples)

    def access(self, i: int) -> int:
        assert 0 <= i < self.length, "index out of range"
        return int(ef_get(self.kernel_data(), i))

    __getitem__ = access

    def to_numpy(self) -> np.ndarray:
        return _ef_decode_all(self.low, self.low_width, self.high, self.length)

    def num_bits(self) -> int:
        return 128 + 64 * (self.low.size + self.high.size + self.samples.size)

    def write(self, out: bytearray) -> None:
        _put_u64(out, self.length, self.universe)
        _put_words(out, self.low)
        _put_words(out, self.high)
        _put_words(out, self.samples)

    @classmethod
    def read(cls, reader: ByteReader) -> EliasFano:
        n, universe = reader.u64(), reader.u64()
        if n and universe == 0:
            raise FormatError("corrupt Elias-Fano header")
        lw = cls._low_width(n, universe)
        low = reader.words(num_words(n * lw))
        high = reader.words(num_words(cls._high_bits(n, universe, lw)))
        samples = reader.words((n + SELECT_SAMPLE - 1) // SELECT_SAMPLE)
        return cls(n, universe, lw, low, high, samples)


class DenseCodes:
    """Dense variable-length codes with Elias-Fano boundaries.

    Value ``v`` is stored as the binary form of ``v + 1`` minus its leading one,
    i.e. ``floor(log2(v + 1))`` bits; zero takes no bits at all.  The code
    start offsets live in an Elias-Fano sequence, so the ``i``-th code is found
    with one select.
    """

    __slots__ = ("length", "total_bits", "codes", "bounds")
    kernel = staticmethod(dense_get)

    def __init__(self, length, total_bits, codes, bounds: EliasFano):
        self.length = int(length)
        self.total_bits = int(total_bits)
        self.codes = codes
        self.bounds = bounds

    @classmethod
    def from_values(cls, values) -> DenseCodes:
        arr = _as_u64_array(values)
        if arr.size and int(arr.max()) >= (1 << 63):
            raise ValueError("dense codes support values below 2**63")
        starts = _dense_lengths(arr)
        total = int(starts[-1])
        codes = np.zeros(num_words(total), dtype=np.uint64)
        _dense_pack(arr, starts, codes)
        return cls(arr.size, total, codes, EliasFano.from_values(starts))

    def __len__(self) -> int:
        return self.length

    def kernel_data(self):
        return (self.codes,) + self.bounds.kernel_data()

    def access(self, i: int) -> int:
        assert 0 <= i < self.length, "index out of range"
        return int(dense_get(self.kernel_data(), i))

    __getitem__ = access

    def to_numpy(self) -> np.ndarray:
        if self.length == 0:
            return np.zeros(0, dtype=np.uint64)
        return gather(dense_get, self.kernel_data(), np.arange(self.length, dtype=np.int64))

    def num_bits(self) -> int:
        return 128 + 64 * self.codes.size + self.bounds.num_bits()

    def write(self, out: bytearray) -> None:
        _put_u64(out, self.length, self.total_bits)
        _put_words(out, self.codes)
        self.bounds.write(out)

    @classmethod
    def read(cls, reader: ByteReader) -> DenseCodes:
        n, total = reader.u64(), reader.u64()
        codes = reader.words(num_words(total))
        bounds = EliasFano.read(reader)
        if len(bounds) != n + 1:
            raise FormatError("dense code boundary index does not match length")
        return cls(n, total, codes, bounds)
