import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from redistfft.fft import Direction, TwiddleTable, dft_oracle, dftn_oracle, fft, partial_transform

from _oracles import brute_dftn, random_complex

F, B = Direction.FORWARD, Direction.BACKWARD


def test_oracle_constant_and_delta():
    assert np.allclose(dft_oracle([1, 1, 1, 1], F), [1, 0, 0, 0], atol=1e-15)
    assert np.allclose(dft_oracle([1, 0, 0, 0], F), [0.25] * 4, atol=1e-15)


def test_oracle_roundtrip():
    u = random_complex(np.random.default_rng(0), 17)
    assert np.abs(dft_oracle(dft_oracle(u, F), B) - u).max() < 1e-12


def test_oracle_literal_sum():
    # the defining sum, one output at a time
    u = random_complex(np.random.default_rng(1), 6)
    N = len(u)
    for k in range(N):
        ref = sum(u[j] * np.exp(-1j * k * 2 * np.pi * j / N) for j in range(N)) / N
        assert abs(dft_oracle(u, F)[k] - ref) < 1e-14


@pytest.mark.parametrize("N", [8, 12, 1, 2, 3, 7, 16, 30, 97])
def test_fft_matches_oracle(N):
    u = random_complex(np.random.default_rng(N), N)
    for d in (F, B):
        assert np.abs(fft(u, d) - dft_oracle(u, d)).max() < 1e-12


def test_fft_n1_identity():
    assert fft([3 + 4j], F)[0] == 3 + 4j
    assert fft([3 + 4j], B)[0] == 3 + 4j


def test_fft_constant_exact():
    assert np.abs(fft([1, 1, 1, 1], F) - [1, 0, 0, 0]).max() <= 1e-15


def test_fft_rejects_bad_input():
    with pytest.raises(ValueError):
        fft([])
    with pytest.raises(ValueError):
        fft(np.ones((2, 2)))


@pytest.mark.parametrize("N", [1, 4, 6, 64, 100])
def test_twiddles(N):
    t = TwiddleTable(N)
    assert np.allclose(np.abs(t.forward), 1, atol=1e-15)
    assert np.allclose(t.forward ** N, 1, atol=1e-12)
    assert np.array_equal(t.backward, np.conj(t.forward))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 70), st.integers(0, 2**32 - 1))
def test_linearity(N, seed):
    rng = np.random.default_rng(seed)
    u, v = random_complex(rng, N), random_complex(rng, N)
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = fft(a * u + b * v, F)
    rhs = a * fft(u, F) + b * fft(v, F)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_partial_transform_rows():
    a = np.array([[1, 1, 1, 1], [2, 2, 2, 2]], dtype=complex)
    out = partial_transform(a, 1, F)
    assert np.allclose(out, [[1, 0, 0, 0], [2, 0, 0, 0]], atol=1e-15)


def test_partial_transforms_compose_to_brute_force():
    u = random_complex(np.random.default_rng(2), (3, 4, 5))
    x = u
    for axis in (2, 1, 0):
        x = partial_transform(x, axis, F)
    assert np.abs(x - brute_dftn(u)).max() < 1e-13
    y = x
    for axis in (0, 1, 2):
        y = partial_transform(y, axis, B)
    assert np.abs(y - u).max() < 1e-12


def test_dftn_oracle_matches_brute_force():
    u = random_complex(np.random.default_rng(3), (2, 3, 4))
    assert np.abs(dftn_oracle(u) - brute_dftn(u)).max() < 1e-14
    assert np.abs(dftn_oracle(u, B) - brute_dftn(u, forward=False)).max() < 1e-13


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_partial_transform_inplace_and_roundtrip(axis):
    u = random_complex(np.random.default_rng(4), (5, 6, 7))
    a = u.copy()
    partial_transform(a, axis, F, out=a)
    partial_transform(a, axis, B, out=a)
    assert np.abs(a - u).max() < 1e-12


def test_all_ones_normalization():
    a = np.ones((4, 3, 5), dtype=complex)
    for axis in (2, 1, 0):
        a = partial_transform(a, axis, F)
    expected = np.zeros((4, 3, 5))
    expected[0, 0, 0] = 1
    assert np.abs(a - expected).max() < 1e-15


def test_partial_transform_errors_and_empty():
    with pytest.raises(ValueError):
        partial_transform(np.zeros((2, 2), complex), 2)
    with pytest.raises(TypeError):
        partial_transform(np.zeros((2, 2)), 0)
    e = np.zeros((0, 4), complex)
    assert partial_transform(e, 1).shape == (0, 4)
