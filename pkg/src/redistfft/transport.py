"""In-process simulated message-passing runtime.

``run_simulated`` runs one thread per virtual rank. The only cross-rank
interaction happens inside collectives on :class:`Group` objects: every
member deposits its arguments, the last member to arrive performs the whole
data movement (in a fixed sender-major order) and then releases the others.
Results therefore do not depend on thread scheduling.

Collective-call discipline is checked with per-group sequence numbers: two
members reaching the same sequence number with different operations raise
:class:`CollectiveMismatchError`, and a state where every live rank waits on
a collective that can no longer complete raises :class:`DeadlockError`.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .dense import kind_of
from .subarray import SubarrayLayout, layouts_disjoint, pack, unpack

__all__ = [
    "Group",
    "run_simulated",
    "TransportError",
    "DeadlockError",
    "CollectiveMismatchError",
    "RankAborted",
]


class TransportError(RuntimeError):
    pass


class DeadlockError(TransportError):
    pass


class CollectiveMismatchError(TransportError):
    pass


class RankAborted(TransportError):
    """Raised inside a rank whose collective was interrupted by a failure
    elsewhere in the world."""


@dataclass
class _Slot:
    op: str
    arrived: dict = field(default_factory=dict)
    done: bool = False
    results: dict = field(default_factory=dict)
    error: Optional[TransportError] = None
    waiters: int = 0
    departed: int = 0


class _World:
    def __init__(self, size: int, timeout: Optional[float]):
        self.size = size
        self.timeout = timeout
        self.cond = threading.Condition()
        self.slots: dict[tuple[str, int], _Slot] = {}
        self.alive = size
        self.blocked = 0
        self.failure: Optional[BaseException] = None

    # all methods below expect self.cond to be held

    def fail(self, exc: BaseException) -> None:
        if self.failure is None:
            self.failure = exc
        self.cond.notify_all()

    def pending_report(self) -> str:
        lines = []
        for (gid, seq), slot in sorted(self.slots.items()):
            if not slot.done:
                lines.append(f"group {gid!r} call #{seq} {slot.op}: arrived {sorted(slot.arrived)}")
        return "; ".join(lines) or "no pending collectives"

    def check_deadlock(self) -> None:
        if self.failure is None and self.alive > 0 and self.blocked == self.alive:
            self.fail(DeadlockError(
                "all live ranks are blocked in collectives that cannot complete: "
                + self.pending_report()
            ))


@dataclass(frozen=True)
class _GroupContext:
    id: str
    members: tuple[int, ...]  # world ranks, indexed by group rank
    world: _World


class Group:
    """One rank's handle on a process group.

    Handles are not shared between ranks; each carries its own collective
    sequence counter.
    """

    def __init__(self, ctx: _GroupContext, rank: int):
        self._ctx = ctx
        self._rank = rank
        self._seq = 0

    @property
    def size(self) -> int:
        return len(self._ctx.members)

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def world_rank(self) -> int:
        return self._ctx.members[self._rank]

    @property
    def members(self) -> tuple[int, ...]:
        return self._ctx.members

    def __repr__(self) -> str:
        return f"Group(id={self._ctx.id!r}, rank={self._rank}, size={self.size})"

    def _collective(self, op: str, payload: Any, compute: Callable[[dict], dict]):
        world = self._ctx.world
        key = (self._ctx.id, self._seq)
        self._seq += 1
        with world.cond:
            if world.failure is not None:
                raise RankAborted("world already failed")
            slot = world.slots.get(key)
            if slot is None:
                slot = world.slots[key] = _Slot(op)
            elif slot.op != op:
                exc = CollectiveMismatchError(
                    f"group {self._ctx.id!r} call #{key[1]}: rank {self._rank} called {op} "
                    f"while ranks {sorted(slot.arrived)} called {slot.op}"
                )
                world.fail(exc)
                raise exc
            slot.arrived[self._rank] = payload
            if len(slot.arrived) == self.size:
                try:
                    slot.results = compute(slot.arrived)
                except TransportError as exc:
                    slot.error = exc
                slot.done = True
                world.blocked -= slot.waiters
                slot.waiters = 0
                world.cond.notify_all()
            else:
                slot.waiters += 1
                world.blocked += 1
                world.check_deadlock()
                while not slot.done:
                    if world.failure is None and not world.cond.wait(world.timeout):
                        world.fail(DeadlockError(
                            f"collective timed out after {world.timeout}s: " + world.pending_report()
                        ))
                    if world.failure is not None and not slot.done:
                        slot.waiters -= 1
                        world.blocked -= 1
                        if isinstance(world.failure, DeadlockError):
                            raise world.failure
                        raise RankAborted(f"aborted while waiting in {op}")
            slot.departed += 1
            if slot.departed == self.size:
                del world.slots[key]
            if slot.error is not None:
                raise type(slot.error)(str(slot.error))
            return slot.results.get(self._rank)

    # -- collectives -------------------------------------------------------

    def barrier(self) -> None:
        self._collective("barrier", None, lambda arrived: {})

    def allgather(self, obj) -> list:
        def compute(arrived):
            values = [arrived[p] for p in range(self.size)]
            return {p: list(values) for p in range(self.size)}

        return self._collective("allgather", obj, compute)

    def split(self, color, key: int = 0) -> Optional["Group"]:
        """Partition the group by ``color``; members of each part are ordered
        by ``(key, rank)``. ``color=None`` opts out and returns None."""
        parent = self._ctx
        seq = self._seq

        def compute(arrived):
            by_color: dict = {}
            for p in range(self.size):
                c, k = arrived[p]
                if c is not None:
                    by_color.setdefault(c, []).append((k, p))
            out = {}
            for idx, (c, entries) in enumerate(
                sorted(by_color.items(), key=lambda item: min(p for _, p in item[1]))
            ):
                entries.sort()
                ctx = _GroupContext(
                    f"{parent.id}.{seq}.{idx}",
                    tuple(parent.members[p] for _, p in entries),
                    parent.world,
                )
                for new_rank, (_, p) in enumerate(entries):
                    out[p] = (ctx, new_rank)
            return out

        res = self._collective("split", (color, key), compute)
        if res is None:
            return None
        return Group(*res)

    def alltoallw(
        self,
        send: np.ndarray,
        send_layouts: Sequence[SubarrayLayout],
        recv: np.ndarray,
        recv_layouts: Sequence[SubarrayLayout],
    ) -> None:
        """Generalized all-to-all: region ``send_layouts[q]`` of this rank's
        ``send`` lands in region ``recv_layouts[p]`` of rank ``q``'s ``recv``
        (``p`` being this rank)."""
        M = self.size
        if len(send_layouts) != M or len(recv_layouts) != M:
            raise ValueError(f"need {M} send and receive layouts")
        payload = (send, tuple(send_layouts), recv, tuple(recv_layouts))

        def compute(arrived):
            for p in range(M):
                s, sls, r, rls = arrived[p]
                for lay in sls:
                    _check_array_layout(s, lay, p, "send")
                for lay in rls:
                    _check_array_layout(r, lay, p, "receive")
                if not layouts_disjoint(rls):
                    raise TransportError(f"rank {p}: receive regions overlap")
            for p in range(M):
                for q in range(M):
                    sl = arrived[p][1][q]
                    rl = arrived[q][3][p]
                    if sl.count != rl.count:
                        raise TransportError(
                            f"pair {p}->{q}: sending {sl.count} elements, receiving {rl.count}"
                        )
                    if sl.kind is not rl.kind:
                        raise TransportError(f"pair {p}->{q}: element kinds differ")
            for p in range(M):
                for q in range(M):
                    sl = arrived[p][1][q]
                    if sl.count:
                        unpack(arrived[q][2], arrived[q][3][p], pack(arrived[p][0], sl))
            return {}

        self._collective("alltoallw", payload, compute)

    def alltoall(self, send: np.ndarray, recv: np.ndarray) -> None:
        """Contiguous all-to-all: chunk ``q`` of this rank's ``send`` becomes
        chunk ``p`` of rank ``q``'s ``recv``. Chunks are equal-sized."""
        M = self.size

        def compute(arrived):
            sizes = {arrived[p][0].size for p in range(M)} | {arrived[p][1].size for p in range(M)}
            if len(sizes) != 1 or next(iter(sizes)) % M:
                raise TransportError(f"alltoall buffer sizes {sorted(sizes)} not uniform multiples of {M}")
            chunk = next(iter(sizes)) // M
            for p in range(M):
                src = _flat(arrived[p][0])
                for q in range(M):
                    dst = _flat(arrived[q][1])
                    dst[p * chunk:(p + 1) * chunk] = src[q * chunk:(q + 1) * chunk]
            return {}

        self._collective("alltoall", (send, recv), compute)

    def alltoallv(
        self,
        send: np.ndarray,
        sendcounts: Sequence[int],
        sdispls: Sequence[int],
        recv: np.ndarray,
        recvcounts: Sequence[int],
        rdispls: Sequence[int],
    ) -> None:
        M = self.size
        if not len(sendcounts) == len(sdispls) == len(recvcounts) == len(rdispls) == M:
            raise ValueError(f"need {M} counts and displacements")
        payload = (send, tuple(sendcounts), tuple(sdispls), recv, tuple(recvcounts), tuple(rdispls))

        def compute(arrived):
            for p in range(M):
                s, sc, sd, r, rc, rd = arrived[p]
                for cnt, dsp, buf, what in ((sc, sd, s, "send"), (rc, rd, r, "receive")):
                    for c, o in zip(cnt, dsp):
                        if c < 0 or o < 0 or o + c > buf.size:
                            raise TransportError(f"rank {p}: {what} chunk [{o}, {o + c}) out of bounds")
            for p in range(M):
                for q in range(M):
                    if arrived[p][1][q] != arrived[q][4][p]:
                        raise TransportError(
                            f"pair {p}->{q}: sending {arrived[p][1][q]}, receiving {arrived[q][4][p]}"
                        )
            for p in range(M):
                src = _flat(arrived[p][0])
                for q in range(M):
                    c = arrived[p][1][q]
                    if c:
                        so = arrived[p][2][q]
                        ro = arrived[q][5][p]
                        _flat(arrived[q][3])[ro:ro + c] = src[so:so + c]
            return {}

        self._collective("alltoallv", payload, compute)


def _flat(a: np.ndarray) -> np.ndarray:
    if not a.flags.c_contiguous:
        raise TransportError("contiguous collectives need C-contiguous buffers")
    return a.reshape(-1)


def _check_array_layout(a: np.ndarray, layout: SubarrayLayout, rank: int, what: str) -> None:
    if tuple(layout.sizes) != a.shape:
        raise TransportError(
            f"rank {rank}: {what} layout sizes {layout.sizes} do not match array shape {a.shape}"
        )
    try:
        kind = kind_of(a)
    except TypeError as exc:
        raise TransportError(f"rank {rank}: {exc}") from None
    if kind is not layout.kind:
        raise TransportError(f"rank {rank}: {what} layout kind does not match array dtype")


def run_simulated(
    world_size: int,
    body: Callable[[Group, int], Any],
    timeout: Optional[float] = 120.0,
) -> list:
    """Run ``body(world, rank)`` on ``world_size`` virtual ranks and return
    the per-rank return values in rank order.

    The first failure (an exception raised by a body, a collective mismatch
    or a deadlock) is re-raised here once all ranks have stopped. ``timeout``
    bounds any single wait inside a collective.
    """
    if world_size < 1:
        raise ValueError("world_size must be >= 1")
    world = _World(world_size, timeout)
    ctx = _GroupContext("world", tuple(range(world_size)), world)
    results: list = [None] * world_size

    def runner(rank: int) -> None:
        try:
            results[rank] = body(Group(ctx, rank), rank)
        except RankAborted:
            pass
        except BaseException as exc:  # noqa: BLE001 - forwarded to the caller
            with world.cond:
                world.fail(exc)
        finally:
            with world.cond:
                world.alive -= 1
                world.check_deadlock()
                world.cond.notify_all()

    if world_size == 1:
        runner(0)
    else:
        threads = [
            threading.Thread(target=runner, args=(r,), name=f"rank-{r}", daemon=True)
            for r in range(world_size)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if world.failure is not None:
        raise world.failure
    return results
