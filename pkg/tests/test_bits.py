import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pthash.bits import (
    SELECT_SAMPLE,
    BitVector,
    ByteReader,
    CompactVector,
    DenseCodes,
    EliasFano,
    popcount64,
    read_bits,
    select_in_word,
    write_bits,
)
from pthash.errors import TruncationError

u64 = st.integers(0, 2**64 - 1)


def _roundtrip(obj):
    out = bytearray()
    obj.write(out)
    reader = ByteReader(bytes(out))
    back = type(obj).read(reader)
    assert reader.at_end()
    return back, bytes(out)


@given(u64)
def test_popcount_matches_python(w):
    assert popcount64(np.uint64(w)) == bin(w).count("1")


@given(u64.filter(lambda w: w != 0), st.data())
def test_select_in_word(w, data):
    ones = [i for i in range(64) if (w >> i) & 1]
    r = data.draw(st.integers(0, len(ones) - 1))
    assert select_in_word(np.uint64(w), r) == ones[r]


@given(st.integers(0, 190), st.integers(1, 64), u64)
def test_write_then_read_bits(pos, width, value):
    value &= (1 << width) - 1
    words = np.zeros(4, dtype=np.uint64)  # write_bits expects a cleared destination
    write_bits(words, pos, np.uint64(value), width)
    assert int(read_bits(words, pos, width)) == value
    as_int = sum(int(w) << (64 * i) for i, w in enumerate(words))
    assert as_int == value << pos


def test_bitvector_basics():
    bv = BitVector(130)
    for i in (0, 63, 64, 129):
        bv.set(i)
    assert [bv[i] for i in (0, 1, 63, 64, 65, 129)] == [1, 0, 1, 1, 0, 1]
    assert bv.count_ones() == 4
    bv.clear(63)
    assert bv.count_ones() == 3
    back, _ = _roundtrip(bv)
    assert np.array_equal(back.to_bools(), bv.to_bools())


@given(st.lists(st.booleans(), max_size=300))
def test_bitvector_from_bools(bits):
    bv = BitVector.from_bools(bits)
    assert bv.to_bools().tolist() == bits
    assert bv.count_ones() == sum(bits)


@given(st.lists(u64, max_size=200))
def test_compact_roundtrip(values):
    cv = CompactVector.from_values(np.array(values, dtype=np.uint64))
    assert cv.to_numpy().tolist() == values
    assert [cv[i] for i in range(len(values))] == values
    back, _ = _roundtrip(cv)
    assert back.to_numpy().tolist() == values
    assert cv.width == max(1, max(values, default=0).bit_length())


def test_compact_rejects_narrow_width():
    with pytest.raises(ValueError):
        CompactVector.from_values([8], width=3)
    with pytest.raises(ValueError):
        CompactVector.from_values([1], width=0)


sorted_lists = st.lists(st.integers(0, 2**40), max_size=300).map(sorted)


@given(sorted_lists, st.integers(0, 1000))
def test_elias_fano_roundtrip(values, slack):
    universe = (values[-1] if values else 0) + 1 + slack
    ef = EliasFano.from_values(values, universe=universe)
    assert ef.to_numpy().tolist() == values
    assert [ef[i] for i in range(len(values))] == values
    back, _ = _roundtrip(ef)
    assert back.to_numpy().tolist() == values


def test_elias_fano_crosses_select_samples():
    rng = np.random.default_rng(3)
    values = np.sort(rng.integers(0, 10**6, 5 * SELECT_SAMPLE + 17))
    ef = EliasFano.from_values(values)
    idx = rng.integers(0, values.size, 2000)
    assert all(ef[i] == values[i] for i in idx)
    assert np.array_equal(ef.to_numpy(), values)


def test_elias_fano_dense_and_repeated():
    values = [0] * 50 + [1] * 50 + [7] * 3
    ef = EliasFano.from_values(values)
    assert ef.low_width == 0
    assert ef.to_numpy().tolist() == values


def test_elias_fano_space_bound():
    # about 2 + log2(u/n) bits per element plus samples and header
    values = np.sort(np.random.default_rng(1).integers(0, 2**30, 10**5))
    ef = EliasFano.from_values(values)
    per = ef.num_bits() / values.size
    assert per < 2 + np.log2(2**30 / 10**5) + 0.2


def test_elias_fano_rejects_bad_input():
    with pytest.raises(ValueError):
        EliasFano.from_values([3, 2])
    with pytest.raises(ValueError):
        EliasFano.from_values([3], universe=3)


@given(st.lists(st.integers(0, 2**62), max_size=300))
def test_dense_codes_roundtrip(values):
    dc = DenseCodes.from_values(values)
    assert dc.to_numpy().tolist() == values
    back, _ = _roundtrip(dc)
    assert back.to_numpy().tolist() == values


def test_dense_code_lengths():
    values = [0, 1, 2, 3, 6, 7, 1000]
    dc = DenseCodes.from_values(values)
    assert dc.total_bits == sum((v + 1).bit_length() - 1 for v in values)
    assert DenseCodes.from_values([0] * 100).total_bits == 0


def test_truncated_payload_raises():
    out = bytearray()
    EliasFano.from_values(range(0, 5000, 3)).write(out)
    for cut in (0, 7, 15, len(out) // 2, len(out) - 1):
        with pytest.raises(TruncationError):
            EliasFano.read(ByteReader(bytes(out[:cut])))


@settings(max_examples=30)
@given(st.lists(st.integers(0, 2**20), min_size=1, max_size=400))
def test_serialization_is_deterministic(values):
    a = _roundtrip(CompactVector.from_values(values))[1]
    b = _roundtrip(CompactVector.from_values(list(values)))[1]
    assert a == b
