import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from redistfft.dense import ElemKind
from redistfft.subarray import (
    SubarrayLayout,
    layout_element_count,
    layouts_disjoint,
    pack,
    subarray_sequence,
    unpack,
)

C = ElemKind.COMPLEX128
R = ElemKind.REAL64


def test_sequence_slab_4x12x12():
    seq = subarray_sequence(C, (3, 12, 12), 1, 4)
    assert [l.subsizes for l in seq] == [(3, 3, 12)] * 4
    assert [l.starts for l in seq] == [(0, s, 0) for s in (0, 3, 6, 9)]
    assert all(l.sizes == (3, 12, 12) and l.kind is C for l in seq)


def test_sequence_uneven():
    seq = subarray_sequence(R, (4, 10, 5), 1, 3)
    assert [l.subsizes[1] for l in seq] == [4, 3, 3]
    assert [l.starts[1] for l in seq] == [0, 4, 7]


def test_sequence_single_part_is_full():
    (lay,) = subarray_sequence(C, (2, 3), 0, 1)
    assert lay == SubarrayLayout.full(C, (2, 3))


def test_sequence_cached_and_validated():
    assert subarray_sequence(C, (5, 6), 1, 2) is subarray_sequence(C, [5, 6], 1, 2)
    with pytest.raises(ValueError):
        subarray_sequence(C, (5, 6), 2, 2)
    with pytest.raises(ValueError):
        subarray_sequence(C, (5, 6), 0, 0)


def test_layout_validation():
    with pytest.raises(ValueError):
        SubarrayLayout(C, (3, 4), (2, 2), (2, 0))
    with pytest.raises(ValueError):
        SubarrayLayout(C, (3, 4), (2,), (0, 0))
    with pytest.raises(ValueError):
        SubarrayLayout(C, (), (), ())


def test_element_counts():
    assert layout_element_count(SubarrayLayout.full(C, (3, 4))) == 12
    assert layout_element_count(SubarrayLayout(C, (3, 4), (0, 4), (0, 0))) == 0
    assert layout_element_count(SubarrayLayout(C, (3, 12, 12), (3, 3, 12), (0, 0, 0))) == 108


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(0, 7), min_size=1, max_size=4),
    st.data(),
)
def test_sequence_partition_properties(shape, data):
    shape = tuple(shape)
    axis = data.draw(st.integers(0, len(shape) - 1))
    M = data.draw(st.integers(1, 9))
    seq = subarray_sequence(R, shape, axis, M)
    assert len(seq) == M
    assert layouts_disjoint(seq)
    assert sum(layout_element_count(l) for l in seq) == int(np.prod(shape))
    a = np.arange(int(np.prod(shape)), dtype=float).reshape(shape)
    packed = np.concatenate([pack(a, l) for l in seq]) if seq else np.array([])
    assert sorted(packed) == sorted(a.ravel())
    # scatter in reverse order rebuilds the array
    b = np.full(shape, -1.0)
    for l in reversed(seq):
        unpack(b, l, pack(a, l))
    assert np.array_equal(a, b)


def test_pack_unpack_outside_untouched():
    a = np.arange(20.0).reshape(4, 5)
    lay = SubarrayLayout(R, (4, 5), (2, 3), (1, 1))
    b = np.zeros((4, 5))
    unpack(b, lay, pack(a, lay))
    mask = np.zeros((4, 5), bool)
    mask[1:3, 1:4] = True
    assert np.array_equal(b[mask], a[mask])
    assert not b[~mask].any()


def test_overlap_detection():
    a = SubarrayLayout(R, (4, 4), (2, 2), (0, 0))
    b = SubarrayLayout(R, (4, 4), (2, 2), (1, 1))
    c = SubarrayLayout(R, (4, 4), (2, 2), (2, 2))
    empty = SubarrayLayout(R, (4, 4), (0, 2), (1, 1))
    assert a.overlaps(b) and not a.overlaps(c)
    assert not b.overlaps(empty)
    assert not layouts_disjoint([a, b, c])
