"""Dense row-major arrays: element kinds, region copies, local transposes and
the NDA1 binary file format.

Local arrays are plain C-contiguous :class:`numpy.ndarray` objects; the
helpers here only pin down the element kinds we support and the exact
ordering used when a rectangular region is read out of, or written into,
such an array.
"""
from __future__ import annotations

import enum
import io
import os
import struct
from typing import BinaryIO, Union

import numpy as np

__all__ = [
    "ElemKind",
    "kind_of",
    "empty",
    "region_read",
    "region_write",
    "local_transpose_01",
    "write_nda",
    "read_nda",
    "NDA_MAGIC",
]


class ElemKind(enum.Enum):
    """Elementary datatype of a dense array."""

    REAL64 = 1
    COMPLEX128 = 2

    @property
    def dtype(self) -> np.dtype:
        return np.dtype("<f8") if self is ElemKind.REAL64 else np.dtype("<c16")

    @property
    def byte_width(self) -> int:
        return self.dtype.itemsize

    @property
    def code(self) -> int:
        # dtype code byte of the NDA1 header
        return self.value


def kind_of(a: np.ndarray) -> ElemKind:
    if a.dtype == np.complex128:
        return ElemKind.COMPLEX128
    if a.dtype == np.float64:
        return ElemKind.REAL64
    raise TypeError(f"unsupported element type {a.dtype}")


def empty(shape, kind: ElemKind = ElemKind.COMPLEX128) -> np.ndarray:
    return np.empty(tuple(shape), dtype=kind.dtype)


def _check_layout(a: np.ndarray, layout) -> None:
    if tuple(layout.sizes) != a.shape:
        raise ValueError(
            f"layout sizes {tuple(layout.sizes)} do not match array shape {a.shape}"
        )
    if layout.kind is not kind_of(a):
        raise TypeError(f"layout kind {layout.kind.name} does not match array {a.dtype}")


def region_read(a: np.ndarray, layout) -> np.ndarray:
    """Return the elements of ``layout``'s region as a new flat array.

    Elements come out in row-major order of the region itself, so the element
    at region coordinates ``r`` is ``a[starts + r]``.
    """
    _check_layout(a, layout)
    return np.array(a[layout.slices], copy=True).reshape(-1)


def region_write(a: np.ndarray, layout, src) -> None:
    """Overwrite the region described by ``layout`` with ``src`` (flat,
    region-row-major). Elements outside the region are left untouched."""
    _check_layout(a, layout)
    src = np.asarray(src)
    if src.size != layout.count:
        raise ValueError(f"source has {src.size} elements, region holds {layout.count}")
    a[layout.slices] = src.reshape(layout.subsizes)


def local_transpose_01(a: np.ndarray) -> np.ndarray:
    """Swap the first two axes of ``a`` into a fresh C-contiguous array."""
    if a.ndim < 2:
        raise ValueError("local transpose needs at least two axes")
    return np.ascontiguousarray(np.swapaxes(a, 0, 1))


NDA_MAGIC = b"NDA1"

PathOrFile = Union[str, os.PathLike, BinaryIO]


def write_nda(dest: PathOrFile, a: np.ndarray) -> None:
    """Write ``a`` in the NDA1 format.

    Layout: ``b"NDA1"``, one dtype byte (1=real64, 2=complex128), one ndim
    byte, ndim little-endian u64 extents, then the row-major little-endian
    payload (complex as interleaved re, im).
    """
    kind = kind_of(a)
    if a.ndim > 255:
        raise ValueError("NDA1 supports at most 255 axes")
    header = NDA_MAGIC + struct.pack("<BB", kind.code, a.ndim)
    header += struct.pack(f"<{a.ndim}Q", *a.shape)
    payload = np.ascontiguousarray(a, dtype=kind.dtype).tobytes()
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "wb") as fh:
            fh.write(header + payload)
    else:
        dest.write(header + payload)


def read_nda(src: Union[PathOrFile, bytes]) -> np.ndarray:
    if isinstance(src, bytes):
        fh: BinaryIO = io.BytesIO(src)
    elif isinstance(src, (str, os.PathLike)):
        with open(src, "rb") as f:
            return read_nda(f.read())
    else:
        fh = src
    if fh.read(4) != NDA_MAGIC:
        raise ValueError("not an NDA1 file (bad magic)")
    code, ndim = struct.unpack("<BB", fh.read(2))
    try:
        kind = ElemKind(code)
    except ValueError:
        raise ValueError(f"unknown NDA1 dtype code {code}") from None
    shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
    count = int(np.prod(shape, dtype=np.int64))
    raw = fh.read(count * kind.byte_width)
    if len(raw) != count * kind.byte_width:
        raise ValueError("truncated NDA1 payload")
    return np.frombuffer(raw, dtype=kind.dtype).reshape(shape).astype(kind.dtype.newbyteorder("="))
