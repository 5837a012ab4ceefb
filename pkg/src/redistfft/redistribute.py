"""Global redistribution of distributed arrays.

Two interchangeable strategies move a local array ``A`` aligned in axis ``v``
(and block-distributed over the group in axis ``w``) to an array ``B``
aligned in ``w`` (and distributed in ``v``):

* :func:`exchange` describes every per-peer chunk of ``A`` and ``B`` as a
  subarray layout and performs a single ``alltoallw``. No local remapping.
* :func:`exchange_baseline` is the traditional route: transpose the send
  chunks into contiguous memory, run ``alltoall`` (or ``alltoallv`` for
  uneven blocks), transpose the received chunks back into place.

Both produce bitwise identical results.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence

import numpy as np

from .decomp import ProcessGrid, decompose
from .dense import kind_of, local_transpose_01
from .subarray import subarray_sequence
from .transport import Group

__all__ = [
    "DistributedArray",
    "local_shape",
    "exchange",
    "exchange_baseline",
    "redistribute",
    "cart_subgroups",
    "METHODS",
]


def local_shape(global_shape, grid: ProcessGrid, axis_map, coords) -> tuple[int, ...]:
    """Local extents of the block owned by the rank at ``coords``."""
    return tuple(
        n if d is None else decompose(n, grid.dims[d], coords[d]).count
        for n, d in zip(global_shape, axis_map)
    )


def _check_axis_map(global_shape, grid: ProcessGrid, axis_map) -> None:
    if len(axis_map) != len(global_shape):
        raise ValueError("axis_map must have one entry per array axis")
    used = [d for d in axis_map if d is not None]
    if len(set(used)) != len(used):
        raise ValueError(f"grid direction assigned to more than one axis in {axis_map}")
    if any(not 0 <= d < grid.ndim for d in used):
        raise ValueError(f"axis_map {axis_map} refers to directions outside a {grid.ndim}-d grid")
    if len(used) == len(global_shape):
        raise ValueError("at least one array axis must be local")


@dataclass
class DistributedArray:
    """One rank's view of a globally distributed dense array.

    ``axis_map[k]`` is the grid direction distributing array axis ``k``, or
    ``None`` when the axis is held in full.
    """

    global_shape: tuple[int, ...]
    grid: ProcessGrid
    axis_map: tuple[Optional[int], ...]
    coords: tuple[int, ...]
    local: np.ndarray

    def __post_init__(self):
        self.global_shape = tuple(int(n) for n in self.global_shape)
        self.axis_map = tuple(self.axis_map)
        self.coords = tuple(self.coords)
        _check_axis_map(self.global_shape, self.grid, self.axis_map)
        expected = local_shape(self.global_shape, self.grid, self.axis_map, self.coords)
        if self.local.shape != expected:
            raise ValueError(f"local shape {self.local.shape} does not match expected {expected}")

    @property
    def rank(self) -> int:
        return self.grid.rank_of(self.coords)

    def offsets(self) -> tuple[int, ...]:
        """Global index of this block's first element along each axis."""
        return tuple(
            0 if d is None else decompose(n, self.grid.dims[d], self.coords[d]).start
            for n, d in zip(self.global_shape, self.axis_map)
        )

    def global_slices(self) -> tuple[slice, ...]:
        return tuple(slice(o, o + n) for o, n in zip(self.offsets(), self.local.shape))


def _check_exchange(group: Group, A: np.ndarray, v: int, B: np.ndarray, w: int) -> None:
    if v == w:
        raise ValueError("alignment axes v and w must differ")
    if A.ndim != B.ndim or not (0 <= v < A.ndim and 0 <= w < A.ndim):
        raise ValueError("A and B must have equal rank and v, w must be valid axes")
    if A.dtype != B.dtype:
        raise TypeError("A and B must share an element type")
    M, p = group.size, group.rank
    for k in range(A.ndim):
        if k == v:
            ok = B.shape[v] == decompose(A.shape[v], M, p).count
        elif k == w:
            ok = A.shape[w] == decompose(B.shape[w], M, p).count
        else:
            ok = A.shape[k] == B.shape[k]
        if not ok:
            raise ValueError(
                f"incompatible shapes A{A.shape} (aligned in {v}) and B{B.shape} "
                f"(aligned in {w}) for rank {p} of {M}"
            )


def exchange(group: Group, A: np.ndarray, v: int, B: np.ndarray, w: int) -> None:
    """Redistribute ``A`` (aligned in ``v``) into ``B`` (aligned in ``w``)
    with one ``alltoallw`` over subarray layouts."""
    _check_exchange(group, A, v, B, w)
    kind = kind_of(A)
    send = subarray_sequence(kind, A.shape, v, group.size)
    recv = subarray_sequence(kind, B.shape, w, group.size)
    group.alltoallw(A, send, B, recv)


def _counts(shape, axis: int, M: int) -> tuple[list[int], list[int]]:
    pre = prod(shape[:axis])
    post = prod(shape[axis + 1:])
    counts = [pre * decompose(shape[axis], M, q).count * post for q in range(M)]
    displs = [0] * M
    for q in range(1, M):
        displs[q] = displs[q - 1] + counts[q - 1]
    return counts, displs


def exchange_baseline(group: Group, A: np.ndarray, v: int, B: np.ndarray, w: int) -> None:
    """Same result as :func:`exchange`, computed the traditional way with
    local transposes around a contiguous all-to-all."""
    _check_exchange(group, A, v, B, w)
    M = group.size
    Nv, Nw = A.shape[v], B.shape[w]
    # (pre, N, post) views: chunk q occupies a contiguous range of the middle axis
    A3 = A.reshape(prod(A.shape[:v]), Nv, prod(A.shape[v + 1:]))
    B3 = B.reshape(prod(B.shape[:w]), Nw, prod(B.shape[w + 1:]))
    if Nv % M == 0 and Nw % M == 0:
        sendbuf = local_transpose_01(A3.reshape(A3.shape[0], M, Nv // M, A3.shape[2]))
        recvbuf = np.empty((M, B3.shape[0], Nw // M, B3.shape[2]), dtype=B.dtype)
        group.alltoall(sendbuf, recvbuf)
        B3[...] = local_transpose_01(recvbuf).reshape(B3.shape)
        return
    scounts, sdispls = _counts(A.shape, v, M)
    rcounts, rdispls = _counts(B.shape, w, M)
    sendbuf = np.empty(A.size, dtype=A.dtype)
    for q in range(M):
        blk = decompose(Nv, M, q)
        sendbuf[sdispls[q]:sdispls[q] + scounts[q]] = A3[:, blk.slice(), :].reshape(-1)
    recvbuf = np.empty(B.size, dtype=B.dtype)
    group.alltoallv(sendbuf, scounts, sdispls, recvbuf, rcounts, rdispls)
    for p in range(M):
        blk = decompose(Nw, M, p)
        B3[:, blk.slice(), :] = recvbuf[rdispls[p]:rdispls[p] + rcounts[p]].reshape(
            B3.shape[0], blk.count, B3.shape[2]
        )


METHODS = {"subarray": exchange, "pack": exchange_baseline}


def cart_subgroups(world: Group, grid: ProcessGrid) -> list[Group]:
    """Split ``world`` into the one-dimensional subgroups of ``grid``.

    Entry ``i`` is this rank's subgroup along direction ``i``: the ranks that
    share every grid coordinate except coordinate ``i``, ordered by it.
    Collective over ``world``.
    """
    if world.size != grid.total_ranks:
        raise ValueError(f"world of {world.size} ranks does not fit grid {grid.dims}")
    coords = grid.coords(world.rank)
    subs = []
    for i in range(grid.ndim):
        color = coords[:i] + coords[i + 1:]
        subs.append(world.split(color, key=coords[i]))
    return subs


def redistribute(
    u: DistributedArray,
    subgroups: Sequence[Group],
    from_axis: int,
    to_axis: int,
    out: Optional[np.ndarray] = None,
    method: str = "subarray",
) -> DistributedArray:
    """Move ``u`` from alignment in ``from_axis`` to alignment in ``to_axis``.

    ``to_axis`` must currently be distributed along some grid direction ``i``
    and ``from_axis`` must be local; afterwards ``from_axis`` is distributed
    along ``i`` and ``to_axis`` is local. The exchange runs concurrently
    inside every direction-``i`` subgroup, each on its own subslab.
    """
    v, w = from_axis, to_axis
    i = u.axis_map[w]
    if i is None:
        raise ValueError(f"axis {w} is not distributed")
    if u.axis_map[v] is not None:
        raise ValueError(f"axis {v} is not local")
    group = subgroups[i]
    if group.size != u.grid.dims[i] or group.rank != u.coords[i]:
        raise ValueError(f"subgroup {group} does not match grid direction {i}")
    new_map = list(u.axis_map)
    new_map[v], new_map[w] = i, None
    new_map = tuple(new_map)
    shape = local_shape(u.global_shape, u.grid, new_map, u.coords)
    if out is None:
        out = np.empty(shape, dtype=u.local.dtype)
    elif out.shape != shape or out.dtype != u.local.dtype:
        raise ValueError(f"output buffer {out.shape}/{out.dtype} does not match {shape}")
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    fn(group, u.local, v, out, w)
    return DistributedArray(u.global_shape, u.grid, new_map, u.coords, out)
