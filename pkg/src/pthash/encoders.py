"""Compressed, randomly accessible pilot tables.

Scheme names follow the usual menu: ``C`` (fixed width), ``D`` (dictionary),
``EF`` (Elias-Fano over prefix sums), ``SDC`` (dense codes over the
values) and the front-back combinations ``C-C``, ``D-D`` and ``D-EF``, where
the first scheme encodes ``P[:split]`` and the second ``P[split:]``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .bits import (
    ByteReader,
    CompactVector,
    DenseCodes,
    EliasFano,
    compact_get,
    dense_get,
    ef_get_pair,
    gather,
    read_bits,
)
from .errors import FormatError

SCHEMES = ("C", "C-C", "D", "D-D", "D-EF", "EF", "SDC")
SCHEME_IDS = {name: i for i, name in enumerate(SCHEMES)}
CLI_NAMES = {"c": "C", "cc": "C-C", "d": "D", "dd": "D-D", "def": "D-EF", "ef": "EF", "sdc": "SDC"}


@njit(cache=True)
def dictionary_get(data, i):
    refs, ref_width, dictionary, width = data
    r = read_bits(refs, i * ref_width, ref_width)
    return read_bits(dictionary, np.int64(r) * width, width)


@njit(cache=True)
def prefix_sum_get(data, i):
    a, b = ef_get_pair(data, i)
    return b - a


def _distinct(values: np.ndarray):
    """Sorted distinct values and the index of each input value among them."""
    if values.size and int(values.max()) < 4 * values.size + 1024:
        present = np.bincount(values.astype(np.int64)) > 0
        distinct = np.flatnonzero(present).astype(np.uint64)
        rank = np.cumsum(present) - 1
        return distinct, rank[values.astype(np.int64)]
    return np.unique(values, return_inverse=True)


class Encoding:
    """Common surface of every pilot encoding."""

    name: str
    kernel = None

    def __len__(self) -> int:
        raise NotImplementedError

    def kernel_data(self):
        raise NotImplementedError

    def routes(self):
        """``(front_kernel, front_data, back_kernel, back_data, split)`` for fused lookups."""
        data = self.kernel_data()
        return self.kernel, data, self.kernel, data, len(self)

    def access(self, i: int) -> int:
        assert 0 <= i < len(self), "index out of range"
        return int(self.kernel(self.kernel_data(), i))

    __getitem__ = access

    def access_many(self, idx) -> np.ndarray:
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0, dtype=np.uint64)
        return gather(self.kernel, self.kernel_data(), idx)

    def to_numpy(self) -> np.ndarray:
        return self.access_many(np.arange(len(self)))

    def num_bits(self) -> int:
        """Serialized payload size, scheme tag byte excluded."""
        out = bytearray()
        self.write(out)
        return 8 * len(out)

    def write(self, out: bytearray) -> None:
        raise NotImplementedError


class Compact(Encoding):
    name = "C"
    kernel = staticmethod(compact_get)

    def __init__(self, values: CompactVector):
        self.values = values

    @classmethod
    def encode(cls, pilots) -> Compact:
        return cls(CompactVector.from_values(pilots))

    def __len__(self):
        return len(self.values)

    def kernel_data(self):
        return self.values.kernel_data()

    def num_bits(self):
        return self.values.num_bits()

    def write(self, out):
        self.values.write(out)

    @classmethod
    def read(cls, reader: ByteReader) -> Compact:
        return cls(CompactVector.read(reader))


class Dictionary(Encoding):
    """Distinct values sorted ascending plus one fixed-width reference per entry."""

    name = "D"
    kernel = staticmethod(dictionary_get)

    def __init__(self, dictionary: CompactVector, refs: CompactVector):
        self.dictionary = dictionary
        self.refs = refs

    @classmethod
    def encode(cls, pilots) -> Dictionary:
        values = np.asarray(pilots, dtype=np.uint64)
        distinct, refs = _distinct(values)
        width = max(1, (len(distinct) - 1).bit_length())
        return cls(CompactVector.from_values(distinct), CompactVector.from_values(refs, width))

    @property
    def r(self) -> int:
        return len(self.dictionary)

    def __len__(self):
        return len(self.refs)

    def kernel_data(self):
        return self.refs.kernel_data() + self.dictionary.kernel_data()

    def num_bits(self):
        return self.dictionary.num_bits() + self.refs.num_bits()

    def write(self, out):
        self.dictionary.write(out)
        self.refs.write(out)

    @classmethod
    def read(cls, reader: ByteReader) -> Dictionary:
        dictionary = CompactVector.read(reader)
        return cls(dictionary, CompactVector.read(reader))


class PrefixSumEliasFano(Encoding):
    """Elias-Fano over ``S[i] = P[0] + ... + P[i-1]``; ``P[i] = S[i+1] - S[i]``."""

    name = "EF"
    kernel = staticmethod(prefix_sum_get)

    def __init__(self, sums: EliasFano):
        self.sums = sums

    @classmethod
    def encode(cls, pilots) -> PrefixSumEliasFano:
        values = np.asarray(pilots, dtype=np.uint64)
        sums = np.zeros(values.size + 1, dtype=np.uint64)
        np.cumsum(values, out=sums[1:])
        return cls(EliasFano.from_values(sums))

    def __len__(self):
        return len(self.sums) - 1

    def kernel_data(self):
        return self.sums.kernel_data()

    def num_bits(self):
        return self.sums.num_bits()

    def write(self, out):
        self.sums.write(out)

    @classmethod
    def read(cls, reader: ByteReader) -> PrefixSumEliasFano:
        sums = EliasFano.read(reader)
        if len(sums) == 0:
            raise FormatError("prefix-sum sequence must hold at least one element")
        return cls(sums)


class SimpleDenseCoding(Encoding):
    """Dense codes straight over pilot values: small pilots take few bits."""

    name = "SDC"
    kernel = staticmethod(dense_get)

    def __init__(self, codes: DenseCodes):
        self.codes = codes

    @classmethod
    def encode(cls, pilots) -> SimpleDenseCoding:
        return cls(DenseCodes.from_values(pilots))

    def __len__(self):
        return len(self.codes)

    def kernel_data(self):
        return self.codes.kernel_data()

    def num_bits(self):
        return self.codes.num_bits()

    def write(self, out):
        self.codes.write(out)

    @classmethod
    def read(cls, reader: ByteReader) -> SimpleDenseCoding:
        return cls(DenseCodes.read(reader))


class FrontBack(Encoding):
    """Front part ``P[:split]`` and back part ``P[split:]`` encoded separately."""

    def __init__(self, front: Encoding, back: Encoding):
        self.front = front
        self.back = back
        self.name = f"{front.name}-{back.name}"

    @property
    def split(self) -> int:
        return len(self.front)

    @classmethod
    def encode(cls, pilots, split: int, front: type[Encoding], back: type[Encoding]) -> FrontBack:
        values = np.asarray(pilots, dtype=np.uint64)
        if not 0 <= split <= values.size:
            raise ValueError(f"split {split} outside [0, {values.size}]")
        return cls(front.encode(values[:split]), back.encode(values[split:]))

    def __len__(self):
        return len(self.front) + len(self.back)

    def routes(self):
        return (self.front.kernel, self.front.kernel_data(),
                self.back.kernel, self.back.kernel_data(), self.split)

    def access(self, i: int) -> int:
        split = self.split
        return self.front.access(i) if i < split else self.back.access(i - split)

    __getitem__ = access

    def access_many(self, idx) -> np.ndarray:
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        out = np.empty(idx.size, dtype=np.uint64)
        in_front = idx < self.split
        out[in_front] = self.front.access_many(idx[in_front])
        out[~in_front] = self.back.access_many(idx[~in_front] - self.split)
        return out

    def num_bits(self):
        return self.front.num_bits() + self.back.num_bits()

    def write(self, out):
        self.front.write(out)
        self.back.write(out)


_SINGLE = {"C": Compact, "D": Dictionary, "EF": PrefixSumEliasFano, "SDC": SimpleDenseCoding}
_FRONT_BACK = {"C-C": ("C", "C"), "D-D": ("D", "D"), "D-EF": ("D", "EF")}


def normalize_scheme(scheme: str) -> str:
    if scheme in SCHEME_IDS:
        return scheme
    try:
        return CLI_NAMES[scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown encoder {scheme!r}; choose from {', '.join(SCHEMES)}") from None


def encode(pilots, scheme: str, split: int | None = None) -> Encoding:
    """Encode a raw pilots table; ``split`` is required for front-back schemes."""
    scheme = normalize_scheme(scheme)
    if scheme in _SINGLE:
        return _SINGLE[scheme].encode(pilots)
    if split is None:
        raise ValueError(f"scheme {scheme} needs a split point")
    front, back = _FRONT_BACK[scheme]
    return FrontBack.encode(pilots, split, _SINGLE[front], _SINGLE[back])


def write_encoding(enc: Encoding, out: bytearray) -> None:
    out.append(SCHEME_IDS[enc.name])
    enc.write(out)


def read_encoding(reader: ByteReader) -> Encoding:
    tag = reader.u8()
    if tag >= len(SCHEMES):
        raise FormatError(f"unknown pilot scheme tag {tag}")
    scheme = SCHEMES[tag]
    if scheme in _SINGLE:
        return _SINGLE[scheme].read(reader)
    front, back = _FRONT_BACK[scheme]
    return FrontBack(_SINGLE[front].read(reader), _SINGLE[back].read(reader))


def measure_bits(enc: Encoding) -> int:
    """Serialized size of an encoding in bits, scheme tag included."""
    return 8 + enc.num_bits()
