"""Benchmark and verification harness on the simulated transport.

Timing protocol: each outer repeat starts with a barrier, then runs ``inner``
consecutive forward+backward transforms. A repeat's time is the maximum over
ranks; the reported value is the minimum over repeats divided by ``inner``.
Redistribution and transform steps are timed separately with the same
reduction.

Timings measure this package's own copy and codec costs inside one process;
they say nothing about network behaviour.
"""
from __future__ import annotations

import csv
import hashlib
import os
import time
from dataclasses import dataclass, field
from math import prod
from typing import Callable, Optional, Sequence

import numpy as np

from .decomp import ProcessGrid, dims_create, grid_create
from .fft import Direction, dftn_oracle
from .plan import (
    StepTimer,
    execute,
    gather,
    initial_axis_map,
    make_plan,
    parallel_transform,
    scatter,
)
from .redistribute import METHODS, cart_subgroups
from .transport import Group, run_simulated

__all__ = [
    "CSV_HEADER",
    "BANNER",
    "BenchConfig",
    "BenchRecord",
    "ConfigError",
    "parse_shape",
    "parse_grid",
    "make_data",
    "reduce_timings",
    "run_bench",
    "write_csv",
    "verify",
    "VERIFY_LIMIT",
]

CSV_HEADER = [
    "method", "shape", "grid", "ranks", "repeats", "inner",
    "t_total_min", "t_redist_min", "t_fft_min", "check",
]

BANNER = (
    "note: timings come from an in-process simulated transport and measure local "
    "copy/codec cost only; they are not comparable to cluster-scale FFT benchmarks."
)

VERIFY_LIMIT = 2 ** 20
ROUNDTRIP_RTOL = 1e-12
ORACLE_RTOL = 1e-10


class ConfigError(ValueError):
    pass


def parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(x) for x in text.replace("x", ",").split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad shape {text!r}") from None
    if len(shape) < 2 or any(n < 1 for n in shape):
        raise ConfigError(f"shape needs at least two positive extents, got {text!r}")
    return shape


def parse_grid(text: str, ranks: int, ndim: int) -> ProcessGrid:
    if ranks < 1:
        raise ConfigError("ranks must be >= 1")
    if text == "auto":
        return ProcessGrid(tuple(dims_create(ranks, ndim - 1)))
    try:
        dims = tuple(int(x) for x in text.lower().split("x"))
        grid = grid_create(ranks, dims)
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r} for {ranks} ranks: {exc}") from None
    if grid.ndim > ndim - 1:
        raise ConfigError(f"a {ndim}-d array allows at most a {ndim - 1}-d grid, got {text!r}")
    return grid


def _fmt(seq) -> str:
    return "x".join(str(n) for n in seq)


@dataclass
class BenchConfig:
    global_shape: tuple[int, ...]
    ranks: int
    grid: str = "auto"
    method: str = "subarray"
    repeats: int = 50
    inner: int = 3
    seed: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.global_shape = tuple(self.global_shape)
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {sorted(METHODS)}, got {self.method!r}")
        if self.repeats < 1 or self.inner < 1:
            raise ConfigError("repeats and inner must be >= 1")
        if len(self.global_shape) < 2 or any(n < 1 for n in self.global_shape):
            raise ConfigError(f"invalid shape {self.global_shape}")
        self.process_grid = parse_grid(self.grid, self.ranks, len(self.global_shape))


@dataclass
class BenchRecord:
    config: BenchConfig
    check: bool
    t_total_min: Optional[float] = None
    t_redist_min: Optional[float] = None
    t_fft_min: Optional[float] = None
    roundtrip_error: float = float("nan")
    forward_digest: str = ""
    samples: list = field(default_factory=list, repr=False)

    def csv_row(self) -> dict:
        cfg = self.config

        def t(x):
            return "" if x is None else f"{x:.9g}"

        return {
            "method": cfg.method,
            "shape": _fmt(cfg.global_shape),
            "grid": _fmt(cfg.process_grid.dims),
            "ranks": cfg.ranks,
            "repeats": cfg.repeats,
            "inner": cfg.inner,
            "t_total_min": t(self.t_total_min),
            "t_redist_min": t(self.t_redist_min),
            "t_fft_min": t(self.t_fft_min),
            "check": "pass" if self.check else "fail",
        }


def make_data(shape: Sequence[int], seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def reduce_timings(per_rank: Sequence[Sequence[Sequence[float]]], inner: int) -> tuple[float, ...]:
    """``per_rank[r][k]`` holds rank ``r``'s (total, redist, fft) for repeat
    ``k``. Max over ranks per repeat, then min over repeats, divided by
    ``inner``."""
    arr = np.asarray(per_rank, dtype=float)  # (ranks, repeats, 3)
    return tuple(float(x) for x in arr.max(axis=0).min(axis=0) / inner)


def run_bench(
    cfg: BenchConfig,
    clock_factory: Optional[Callable[[int], Callable[[], float]]] = None,
) -> BenchRecord:
    """Run the timing protocol for ``cfg``. ``clock_factory(rank)`` supplies
    each rank's clock (default :func:`time.perf_counter`)."""
    grid = cfg.process_grid
    shape = cfg.global_shape
    data = make_data(shape, cfg.seed)
    parts = scatter(data, grid, initial_axis_map(len(shape), grid))

    def body(world: Group, rank: int):
        clock = clock_factory(rank) if clock_factory else time.perf_counter
        subs = cart_subgroups(world, grid)
        plan = make_plan(shape, grid, rank)
        timer = StepTimer(clock)
        u = parts[rank]
        samples = []
        for _ in range(cfg.repeats):
            world.barrier()
            r0, f0 = timer.totals["redist"], timer.totals["fft"]
            t0 = clock()
            for _ in range(cfg.inner):
                u_hat = execute(plan, Direction.FORWARD, u, subs, cfg.method, timer)
                u_back = execute(plan, Direction.BACKWARD, u_hat, subs, cfg.method, timer)
            t1 = clock()
            samples.append((t1 - t0, timer.totals["redist"] - r0, timer.totals["fft"] - f0))
        return samples, u_hat, u_back

    results = run_simulated(cfg.ranks, body)
    samples = [r[0] for r in results]
    forward = gather([r[1] for r in results])
    back = gather([r[2] for r in results])
    err = float(np.abs(back - data).max() / max(np.abs(data).max(), 1e-300))
    rec = BenchRecord(
        cfg,
        check=err <= ROUNDTRIP_RTOL,
        roundtrip_error=err,
        forward_digest=hashlib.sha256(np.ascontiguousarray(forward).tobytes()).hexdigest(),
        samples=samples,
    )
    if rec.check:
        rec.t_total_min, rec.t_redist_min, rec.t_fft_min = reduce_timings(samples, cfg.inner)
    return rec


def write_csv(path, records: Sequence[BenchRecord]) -> None:
    """Append rows to ``path``, writing the header when the file is new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        if new:
            w.writeheader()
        for rec in records:
            w.writerow(rec.csv_row())


def _rel(a: np.ndarray, ref: np.ndarray) -> float:
    scale = np.abs(ref).max() if ref.size else 0.0
    return float(np.abs(a - ref).max() / (scale if scale > 0 else 1.0)) if ref.size else 0.0


def verify(global_shape: Sequence[int], grid: ProcessGrid, seed: int = 1) -> list[tuple[str, bool, str]]:
    """Check the parallel transform for one configuration against the
    direct DFT and against itself across methods and buffer schemes."""
    global_shape = tuple(global_shape)
    if prod(global_shape) > VERIFY_LIMIT:
        raise ConfigError(f"verify is limited to {VERIFY_LIMIT} elements, got {prod(global_shape)}")
    if grid.ndim > len(global_shape) - 1:
        raise ConfigError("grid has too many directions for this array")
    u = make_data(global_shape, seed)
    oracle = dftn_oracle(u)
    rows = []
    outputs = {}
    for method in METHODS:
        for buffers in ("two", "naive"):
            f = parallel_transform(u, grid, Direction.FORWARD, method, buffers)
            b = parallel_transform(f, grid, Direction.BACKWARD, method, buffers)
            outputs[method, buffers] = (f, b)
        f, b = outputs[method, "two"]
        e = _rel(f, oracle)
        rows.append((f"{method}: forward vs direct DFT", e <= ORACLE_RTOL, f"rel err {e:.2e}"))
        e = _rel(b, u)
        rows.append((f"{method}: backward(forward(u)) == u", e <= ROUNDTRIP_RTOL, f"rel err {e:.2e}"))
        same = all(np.array_equal(x, y) for x, y in zip(outputs[method, "two"], outputs[method, "naive"]))
        rows.append((f"{method}: two-buffer == per-stage buffers", same, "bitwise"))
    same = all(np.array_equal(x, y) for x, y in zip(outputs["subarray", "two"], outputs["pack", "two"]))
    rows.append(("subarray == pack", same, "bitwise"))
    return rows
