"""Subarray layouts: descriptors for rectangular regions of dense arrays.

A layout holds no element data. ``pack``/``unpack`` are the codec a
transport uses to move a region through a contiguous buffer; the wire order
is row-major over the region and must stay that way.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Sequence

import numpy as np

from .decomp import decompose
from .dense import ElemKind, region_read, region_write

__all__ = [
    "SubarrayLayout",
    "subarray_sequence",
    "layout_element_count",
    "pack",
    "unpack",
    "layouts_disjoint",
]


@dataclass(frozen=True)
class SubarrayLayout:
    kind: ElemKind
    sizes: tuple[int, ...]
    subsizes: tuple[int, ...]
    starts: tuple[int, ...]

    def __post_init__(self):
        for name in ("sizes", "subsizes", "starts"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        d = len(self.sizes)
        if d < 1 or len(self.subsizes) != d or len(self.starts) != d:
            raise ValueError("sizes, subsizes and starts must have the same length >= 1")
        for n, s, o in zip(self.sizes, self.subsizes, self.starts):
            if s < 0 or o < 0 or o + s > n:
                raise ValueError(
                    f"region (subsizes={self.subsizes}, starts={self.starts}) "
                    f"does not fit in sizes={self.sizes}"
                )

    @classmethod
    def full(cls, kind: ElemKind, sizes: Sequence[int]) -> "SubarrayLayout":
        return cls(kind, tuple(sizes), tuple(sizes), (0,) * len(sizes))

    @property
    def count(self) -> int:
        return prod(self.subsizes)

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(o, o + s) for o, s in zip(self.starts, self.subsizes))

    def overlaps(self, other: "SubarrayLayout") -> bool:
        if self.count == 0 or other.count == 0:
            return False
        return all(
            a0 < b0 + bs and b0 < a0 + as_
            for a0, as_, b0, bs in zip(self.starts, self.subsizes, other.starts, other.subsizes)
        )


@lru_cache(maxsize=1024)
def _sequence(kind: ElemKind, shape: tuple[int, ...], axis: int, parts: int):
    out = []
    for p in range(parts):
        n, s = decompose(shape[axis], parts, p)
        subsizes = shape[:axis] + (n,) + shape[axis + 1:]
        starts = (0,) * axis + (s,) + (0,) * (len(shape) - axis - 1)
        out.append(SubarrayLayout(kind, shape, subsizes, starts))
    return tuple(out)


def subarray_sequence(kind: ElemKind, shape: Sequence[int], axis: int, parts: int):
    """Partition ``shape`` along ``axis`` into ``parts`` balanced blocks and
    return one layout per block, in part order.

    Results are cached, so repeated calls with the same arguments return the
    same (immutable) layout objects.
    """
    shape = tuple(int(n) for n in shape)
    if not 0 <= axis < len(shape):
        raise ValueError(f"axis {axis} out of range for {len(shape)}-d shape")
    if parts <= 0:
        raise ValueError("parts must be positive")
    return _sequence(kind, shape, axis, parts)


def layout_element_count(layout: SubarrayLayout) -> int:
    return layout.count


def pack(a: np.ndarray, layout: SubarrayLayout) -> np.ndarray:
    return region_read(a, layout)


def unpack(a: np.ndarray, layout: SubarrayLayout, buf) -> None:
    region_write(a, layout, buf)


def layouts_disjoint(layouts: Sequence[SubarrayLayout]) -> bool:
    for i, a in enumerate(layouts):
        for b in layouts[i + 1:]:
            if a.overlaps(b):
                return False
    return True
