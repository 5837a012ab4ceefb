"""Balanced block-contiguous decompositions and Cartesian process grids."""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import NamedTuple, Sequence

__all__ = ["Block", "decompose", "blocks", "dims_create", "ProcessGrid", "grid_create"]


class Block(NamedTuple):
    count: int
    start: int

    @property
    def stop(self) -> int:
        return self.start + self.count

    def slice(self) -> slice:
        return slice(self.start, self.start + self.count)


def decompose(N: int, M: int, p: int) -> Block:
    """Number of elements and start index of part ``p`` when ``N`` elements
    are split into ``M`` contiguous parts whose sizes differ by at most one.

    The first ``N % M`` parts get one extra element.
    """
    if N < 0:
        raise ValueError(f"extent must be non-negative, got {N}")
    if M <= 0:
        raise ValueError(f"part count must be positive, got {M}")
    if not 0 <= p < M:
        raise ValueError(f"part index {p} out of range for {M} parts")
    q, r = divmod(N, M)
    if r > p:
        n = q + 1
        return Block(n, n * p)
    return Block(q, q * p + r)


def blocks(N: int, M: int) -> list[Block]:
    return [decompose(N, M, p) for p in range(M)]


def _factorizations(n: int, k: int, largest: int):
    # non-increasing k-tuples with product n and first factor <= largest
    if k == 1:
        if n <= largest:
            yield (n,)
        return
    for f in range(min(n, largest), 0, -1):
        if n % f == 0:
            for rest in _factorizations(n // f, k - 1, f):
                yield (f,) + rest


def dims_create(nprocs: int, ndims: int) -> list[int]:
    """Balanced Cartesian grid dimensions for ``nprocs`` ranks.

    Among all non-increasing factorizations of ``nprocs`` into ``ndims``
    factors, pick the one with the smallest spread ``max - min``; ties go to
    the lexicographically smallest tuple.
    """
    if nprocs <= 0 or ndims <= 0:
        raise ValueError("nprocs and ndims must be positive")
    best = min(_factorizations(nprocs, ndims, nprocs), key=lambda f: (f[0] - f[-1], f))
    return list(best)


@dataclass(frozen=True)
class ProcessGrid:
    """Cartesian arrangement of ranks with row-major rank ordering.

    Direction ``i`` of the grid distributes array axis ``i`` in the initial
    (forward input) layout of a transform.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d <= 0 for d in self.dims):
            raise ValueError(f"invalid grid dims {self.dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def total_ranks(self) -> int:
        return prod(self.dims)

    def coords(self, rank: int) -> tuple[int, ...]:
        if not 0 <= rank < self.total_ranks:
            raise ValueError(f"rank {rank} outside grid of {self.total_ranks}")
        out = []
        for d in reversed(self.dims):
            rank, c = divmod(rank, d)
            out.append(c)
        return tuple(reversed(out))

    def rank_of(self, coords: Sequence[int]) -> int:
        if len(coords) != self.ndim:
            raise ValueError("coordinate count does not match grid")
        rank = 0
        for c, d in zip(coords, self.dims):
            if not 0 <= c < d:
                raise ValueError(f"coords {tuple(coords)} outside grid {self.dims}")
            rank = rank * d + c
        return rank

    def subgroup(self, direction: int, rank: int) -> tuple[tuple[int, ...], int]:
        """Ranks sharing every coordinate of ``rank`` except ``direction``,
        in coordinate order, plus ``rank``'s position among them."""
        c = list(self.coords(rank))
        members = []
        for k in range(self.dims[direction]):
            c[direction] = k
            members.append(self.rank_of(c))
        return tuple(members), self.coords(rank)[direction]

    def subgroups(self, direction: int) -> list[tuple[int, ...]]:
        """All distinct subgroups along ``direction``, ordered by first member."""
        seen = {}
        for r in range(self.total_ranks):
            members, _ = self.subgroup(direction, r)
            seen.setdefault(members, None)
        return sorted(seen)


def grid_create(nprocs: int, dims: Sequence[int]) -> ProcessGrid:
    grid = ProcessGrid(tuple(dims))
    if grid.total_ranks != nprocs:
        raise ValueError(f"grid {grid.dims} has {grid.total_ranks} ranks, expected {nprocs}")
    return grid
