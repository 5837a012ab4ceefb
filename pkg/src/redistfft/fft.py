"""Serial 1D FFTs and partial transforms along one axis of a local array.

Normalization follows the forward-normalized convention::

    forward:  uhat[k] = (1/N) * sum_j u[j] * exp(-2*pi*i*j*k/N)
    backward: u[j]    =         sum_k uhat[k] * exp(+2*pi*i*j*k/N)

so ``backward(forward(u)) == u``. Note this differs from numpy, which puts the
``1/N`` on the inverse transform.

Power-of-two lengths use an iterative radix-2 transform; every other length
goes through Bluestein's chirp-z convolution on top of it.
"""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

__all__ = [
    "Direction",
    "TwiddleTable",
    "dft_oracle",
    "dftn_oracle",
    "fft",
    "partial_transform",
]


class Direction(enum.Enum):
    FORWARD = -1
    BACKWARD = 1

    @property
    def sign(self) -> int:
        return self.value

    def inverse(self) -> "Direction":
        return Direction.BACKWARD if self is Direction.FORWARD else Direction.FORWARD


class TwiddleTable:
    """Powers ``w**k, k = 0..N-1`` of ``w = exp(-2*pi*i/N)`` (forward) and
    their conjugates (backward)."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("twiddle table length must be >= 1")
        self.N = N
        k = np.arange(N)
        fwd = np.exp(-2j * np.pi * k / N)
        # exact values on the axes keep e.g. N=4 free of 1e-17 residue
        q, rem = divmod(4 * k, N)
        exact = rem == 0
        fwd[exact] = np.array([1, -1j, -1, 1j])[q[exact] % 4]
        self.forward = fwd
        self.backward = np.conj(fwd)

    def roots(self, direction: Direction) -> np.ndarray:
        return self.forward if direction is Direction.FORWARD else self.backward


@lru_cache(maxsize=64)
def _twiddles(N: int) -> TwiddleTable:
    return TwiddleTable(N)


@lru_cache(maxsize=64)
def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def dft_oracle(u, direction: Direction = Direction.FORWARD) -> np.ndarray:
    """Literal O(N^2) evaluation of the forward/backward DFT sums."""
    u = np.asarray(u, dtype=np.complex128)
    N = u.shape[-1]
    if N < 1:
        raise ValueError("empty sequence")
    jk = np.outer(np.arange(N), np.arange(N)) % N
    mat = np.exp(direction.sign * 2j * np.pi * jk / N)
    out = u @ mat
    return out / N if direction is Direction.FORWARD else out


def dftn_oracle(u, direction: Direction = Direction.FORWARD) -> np.ndarray:
    """Multidimensional DFT by applying the literal DFT sum along every axis.

    Independent of :func:`fft`; meant as a test and verification reference.
    """
    out = np.asarray(u, dtype=np.complex128)
    for axis in range(out.ndim):
        out = np.moveaxis(dft_oracle(np.moveaxis(out, axis, -1), direction), -1, axis)
    return out


def _radix2(x: np.ndarray, direction: Direction) -> np.ndarray:
    # unnormalized transform along the last axis of a 2-d (batch, n) array, n = 2**k
    batch, n = x.shape
    y = x[:, _bitrev(n)]
    roots = _twiddles(n).roots(direction)
    size = 2
    while size <= n:
        half = size // 2
        w = roots[:: n // size][:half]
        y = y.reshape(batch, n // size, size)
        even = y[..., :half]
        odd = y[..., half:] * w
        y = np.concatenate((even + odd, even - odd), axis=-1)
        size *= 2
    return y.reshape(batch, n)


@lru_cache(maxsize=64)
def _chirp(n: int) -> tuple[np.ndarray, np.ndarray, int]:
    L = 1 << (2 * n - 1).bit_length()
    k = np.arange(n)
    # k^2 mod 2n keeps the phase argument small and exact
    c = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    b = np.zeros(L, dtype=np.complex128)
    b[:n] = np.conj(c)
    b[L - n + 1:] = np.conj(c[1:])[::-1]
    bhat = _radix2(b[None, :], Direction.FORWARD)[0]
    return c, bhat, L


def _bluestein(x: np.ndarray, direction: Direction) -> np.ndarray:
    batch, n = x.shape
    if direction is Direction.BACKWARD:
        return np.conj(_bluestein(np.conj(x), Direction.FORWARD))
    c, bhat, L = _chirp(n)
    a = np.zeros((batch, L), dtype=np.complex128)
    a[:, :n] = x * c
    conv = _radix2(_radix2(a, Direction.FORWARD) * bhat, Direction.BACKWARD) / L
    return conv[:, :n] * c


def _fft_lines(x: np.ndarray, direction: Direction) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        out = x.copy()
    elif n & (n - 1) == 0:
        out = _radix2(x, direction)
    else:
        out = _bluestein(x, direction)
    if direction is Direction.FORWARD:
        out /= n
    return out


def fft(u, direction: Direction = Direction.FORWARD) -> np.ndarray:
    """Transform a 1D sequence of any length >= 1."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 1 or u.size < 1:
        raise ValueError("fft expects a non-empty 1D sequence")
    return _fft_lines(u[None, :], direction)[0]


def partial_transform(
    a: np.ndarray,
    axis: int,
    direction: Direction = Direction.FORWARD,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Transform every 1D line of ``a`` along ``axis``.

    Lines are gathered into a contiguous scratch buffer, transformed and
    written to ``out`` (which may be ``a`` itself). Empty arrays are left
    alone.
    """
    if not 0 <= axis < a.ndim:
        raise ValueError(f"axis {axis} out of range for {a.ndim}-d array")
    if a.dtype != np.complex128:
        raise TypeError(f"partial transforms need complex128 data, got {a.dtype}")
    if out is None:
        out = np.empty_like(a)
    elif out.shape != a.shape or out.dtype != a.dtype:
        raise ValueError("output array must match input shape and dtype")
    if a.size == 0:
        return out
    lines = np.moveaxis(a, axis, -1)
    res = _fft_lines(lines.reshape(-1, a.shape[axis]), direction)
    np.moveaxis(out, axis, -1)[...] = res.reshape(lines.shape)
    return out
