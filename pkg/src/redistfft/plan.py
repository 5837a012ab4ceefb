"""Parallel FFT plans for d-dimensional arrays on m-dimensional process grids
(m <= d - 1).

The forward program for input distributed as ``(j_0/P_0, ..., j_{m-1}/P_{m-1},
j_m, ..., j_{d-1})``:

1. transform axes ``d-1, ..., m`` locally;
2. for ``i = m-1, ..., 0``: redistribute within direction-``i`` subgroups
   from alignment in axis ``i+1`` to alignment in axis ``i``, then transform
   axis ``i``.

The result is distributed as ``(k_0, k_1/P_0, ..., k_m/P_{m-1}, k_{m+1}, ...)``.
The backward program is the exact reverse with inverted transforms.
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from math import prod
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .decomp import ProcessGrid
from .fft import Direction, partial_transform
from .redistribute import DistributedArray, cart_subgroups, local_shape, redistribute
from .transport import Group, run_simulated

__all__ = [
    "PartialTransform",
    "Redistribute",
    "Plan",
    "StepTimer",
    "make_plan",
    "execute",
    "initial_axis_map",
    "final_axis_map",
    "scatter",
    "gather",
    "parallel_transform",
]


@dataclass(frozen=True)
class PartialTransform:
    axis: int
    direction: Direction


@dataclass(frozen=True)
class Redistribute:
    grid_direction: int
    from_axis: int
    to_axis: int


PlanStep = Union[PartialTransform, Redistribute]


def initial_axis_map(ndim: int, grid: ProcessGrid) -> tuple:
    return tuple(range(grid.ndim)) + (None,) * (ndim - grid.ndim)


def final_axis_map(ndim: int, grid: ProcessGrid) -> tuple:
    return (None,) + tuple(range(grid.ndim)) + (None,) * (ndim - grid.ndim - 1)


def _forward_steps(d: int, m: int) -> list[PlanStep]:
    steps: list[PlanStep] = [PartialTransform(a, Direction.FORWARD) for a in range(d - 1, m - 1, -1)]
    for i in range(m - 1, -1, -1):
        steps.append(Redistribute(i, i + 1, i))
        steps.append(PartialTransform(i, Direction.FORWARD))
    return steps


def _reverse(steps: Sequence[PlanStep]) -> list[PlanStep]:
    out: list[PlanStep] = []
    for s in reversed(steps):
        if isinstance(s, PartialTransform):
            out.append(PartialTransform(s.axis, s.direction.inverse()))
        else:
            out.append(Redistribute(s.grid_direction, s.to_axis, s.from_axis))
    return out


class StepTimer:
    """Accumulates time spent in redistribution and transform steps."""

    def __init__(self, clock: Callable[[], float] = time.perf_counter):
        self.clock = clock
        self.totals = {"redist": 0.0, "fft": 0.0}

    @contextmanager
    def __call__(self, name: str):
        t0 = self.clock()
        try:
            yield
        finally:
            self.totals[name] += self.clock() - t0


@dataclass
class Plan:
    """Step program plus preallocated work arrays for one rank.

    ``stage_maps[k]``/``stage_shapes[k]`` describe the distributed array
    between the ``k``-th and ``k+1``-th forward redistribution.
    """

    global_shape: tuple[int, ...]
    grid: ProcessGrid
    coords: tuple[int, ...]
    forward_steps: list[PlanStep]
    backward_steps: list[PlanStep]
    stage_maps: list[tuple]
    stage_shapes: list[tuple[int, ...]]
    buffers: str = "two"
    _work: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        sizes = [prod(s) for s in self.stage_shapes]
        if self.buffers == "naive":
            self._work = [np.empty(s, dtype=np.complex128) for s in self.stage_shapes]
        elif self.buffers == "two":
            # the parity holding the largest stage gets the largest buffer; the
            # other parity never needs more than the second largest
            largest = max(range(len(sizes)), key=sizes.__getitem__)
            ordered = sorted(sizes, reverse=True) + [0]
            cap = [0, 0]
            cap[largest % 2] = ordered[0]
            cap[1 - largest % 2] = ordered[1]
            self._work = [np.empty(c, dtype=np.complex128) for c in cap]
        else:
            raise ValueError(f"unknown buffer scheme {self.buffers!r}")

    @property
    def ndim(self) -> int:
        return len(self.global_shape)

    def steps(self, direction: Direction) -> list[PlanStep]:
        return self.forward_steps if direction is Direction.FORWARD else self.backward_steps

    def work_bytes(self) -> int:
        return sum(b.nbytes for b in self._work)

    def stage_array(self, k: int) -> np.ndarray:
        shape = self.stage_shapes[k]
        if self.buffers == "naive":
            return self._work[k]
        return self._work[k % 2][: prod(shape)].reshape(shape)


def make_plan(
    global_shape: Sequence[int],
    grid: ProcessGrid,
    rank: int = 0,
    buffers: str = "two",
) -> Plan:
    """Build the forward/backward step program for ``grid`` rank ``rank``.

    ``buffers`` selects the work-array scheme: ``"two"`` alternates two
    flat buffers sized to the two largest stages, ``"naive"`` keeps one
    array per distinct stage shape.
    """
    global_shape = tuple(int(n) for n in global_shape)
    d, m = len(global_shape), grid.ndim
    if m > d - 1:
        raise ValueError(f"a {d}-d array can be distributed on at most a {d - 1}-d grid, got {m}-d")
    if any(n < 1 for n in global_shape):
        raise ValueError(f"global extents must be positive, got {global_shape}")
    coords = grid.coords(rank)
    fwd = _forward_steps(d, m)
    maps = [initial_axis_map(d, grid)]
    for s in fwd:
        if isinstance(s, Redistribute):
            nxt = list(maps[-1])
            nxt[s.from_axis], nxt[s.to_axis] = s.grid_direction, None
            maps.append(tuple(nxt))
    shapes = [local_shape(global_shape, grid, mp, coords) for mp in maps]
    return Plan(global_shape, grid, coords, fwd, _reverse(fwd), maps, shapes, buffers)


def execute(
    plan: Plan,
    direction: Direction,
    u: DistributedArray,
    subgroups: Sequence[Group],
    method: str = "subarray",
    timer: Optional[StepTimer] = None,
) -> DistributedArray:
    """Run the forward or backward program on ``u``. Collective over the grid.

    ``u`` is not modified; the returned array owns its data.
    """
    nstages = len(plan.stage_maps)
    first, last = (0, nstages - 1) if direction is Direction.FORWARD else (nstages - 1, 0)
    if u.axis_map != plan.stage_maps[first] or u.coords != plan.coords:
        raise ValueError(
            f"input layout {u.axis_map} at {u.coords} does not match plan "
            f"{plan.stage_maps[first]} at {plan.coords}"
        )
    if u.global_shape != plan.global_shape:
        raise ValueError("input global shape does not match plan")
    timer = timer or StepTimer()
    stage = first
    buf = plan.stage_array(stage)
    buf[...] = u.local
    cur = DistributedArray(u.global_shape, u.grid, u.axis_map, u.coords, buf)
    step_dir = 1 if direction is Direction.FORWARD else -1
    for step in plan.steps(direction):
        if isinstance(step, PartialTransform):
            with timer("fft"):
                partial_transform(cur.local, step.axis, step.direction, out=cur.local)
        else:
            stage += step_dir
            with timer("redist"):
                cur = redistribute(
                    cur, subgroups, step.from_axis, step.to_axis,
                    out=plan.stage_array(stage), method=method,
                )
    assert stage == last
    cur.local = cur.local.copy()
    return cur


def scatter(global_array: np.ndarray, grid: ProcessGrid, axis_map) -> list[DistributedArray]:
    """Split a global array into per-rank blocks (rank order)."""
    global_array = np.asarray(global_array)
    parts = []
    for r in range(grid.total_ranks):
        coords = grid.coords(r)
        shape = local_shape(global_array.shape, grid, axis_map, coords)
        probe = DistributedArray(
            global_array.shape, grid, axis_map, coords, np.empty(shape, global_array.dtype)
        )
        probe.local = np.ascontiguousarray(global_array[probe.global_slices()])
        parts.append(probe)
    return parts


def gather(parts: Union[DistributedArray, Sequence[DistributedArray]]) -> np.ndarray:
    """Reassemble a global array from the blocks of every rank."""
    if isinstance(parts, DistributedArray):
        parts = [parts]
    if not parts:
        raise ValueError("nothing to gather")
    ref = parts[0]
    if len(parts) != ref.grid.total_ranks:
        raise ValueError(f"need blocks from all {ref.grid.total_ranks} ranks, got {len(parts)}")
    out = np.empty(ref.global_shape, dtype=ref.local.dtype)
    seen = np.zeros(ref.global_shape, dtype=bool)
    for u in parts:
        if u.global_shape != ref.global_shape or u.axis_map != ref.axis_map or u.grid != ref.grid:
            raise ValueError("blocks disagree on global shape, grid or axis map")
        sl = u.global_slices()
        if seen[sl].any():
            raise ValueError(f"block of rank {u.rank} overlaps another block")
        seen[sl] = True
        out[sl] = u.local
    if not seen.all():
        raise ValueError("blocks do not cover the global array")
    return out


def parallel_transform(
    global_array: np.ndarray,
    grid: ProcessGrid,
    direction: Direction = Direction.FORWARD,
    method: str = "subarray",
    buffers: str = "two",
) -> np.ndarray:
    """Scatter ``global_array``, run the parallel transform on simulated ranks
    and gather the result. Convenience wrapper for tests and the CLI."""
    global_array = np.asarray(global_array, dtype=np.complex128)
    d = global_array.ndim
    start_map = initial_axis_map(d, grid) if direction is Direction.FORWARD else final_axis_map(d, grid)
    parts = scatter(global_array, grid, start_map)

    def body(world: Group, rank: int):
        subs = cart_subgroups(world, grid)
        plan = make_plan(global_array.shape, grid, rank, buffers=buffers)
        return execute(plan, direction, parts[rank], subs, method=method)

    return gather(run_simulated(grid.total_ranks, body))
