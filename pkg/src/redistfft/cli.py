"""``bench-cli``: run benchmarks, verification and one-off transforms.

Exit codes: 0 on success, 1 when a correctness check fails, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import sys

from . import bench
from .fft import Direction
from .dense import read_nda, write_nda
from .plan import parallel_transform
from .redistribute import METHODS

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ranks", type=int, default=8)
    p.add_argument("--grid", default="auto", help="'auto' or explicit dims like 2x4")
    p.add_argument("--seed", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench-cli", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="time forward+backward transforms")
    run.add_argument("--shape", default="64,64,64")
    _common(run)
    run.add_argument("--method", choices=sorted(METHODS), default="subarray")
    run.add_argument("--repeats", type=int, default=50)
    run.add_argument("--inner", type=int, default=3)
    run.add_argument("--out", default=None, help="append the CSV row to this file")

    ver = sub.add_parser("verify", help="check a configuration against the direct DFT")
    ver.add_argument("--shape", default="8,9,10")
    _common(ver)

    tr = sub.add_parser("transform", help="transform an NDA1 array file")
    tr.add_argument("--in", dest="src", required=True)
    tr.add_argument("--out", dest="dst", required=True)
    _common(tr)
    tr.add_argument("--method", choices=sorted(METHODS), default="subarray")
    tr.add_argument("--direction", choices=["forward", "backward"], default="forward")
    return parser


def _run(args) -> int:
    cfg = bench.BenchConfig(
        bench.parse_shape(args.shape), args.ranks, args.grid, args.method,
        args.repeats, args.inner, args.seed, args.out,
    )
    print(bench.BANNER, file=sys.stderr)
    rec = bench.run_bench(cfg)
    w = csv.DictWriter(sys.stdout, fieldnames=bench.CSV_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerow(rec.csv_row())
    if cfg.out:
        bench.write_csv(cfg.out, [rec])
    if not rec.check:
        print(f"round-trip check failed (rel err {rec.roundtrip_error:.3e})", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _verify(args) -> int:
    shape = bench.parse_shape(args.shape)
    grid = bench.parse_grid(args.grid, args.ranks, len(shape))
    rows = bench.verify(shape, grid, args.seed)
    print(f"verify shape={'x'.join(map(str, shape))} grid={'x'.join(map(str, grid.dims))}")
    width = max(len(name) for name, _, _ in rows)
    for name, ok, detail in rows:
        print(f"  {'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_CHECK


def _transform(args) -> int:
    try:
        data = read_nda(args.src)
    except (OSError, ValueError) as exc:
        raise bench.ConfigError(str(exc)) from None
    grid = bench.parse_grid(args.grid, args.ranks, data.ndim)
    direction = Direction.FORWARD if args.direction == "forward" else Direction.BACKWARD
    out = parallel_transform(data.astype(complex), grid, direction, args.method)
    write_nda(args.dst, out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _run, "verify": _verify, "transform": _transform}[args.command]
    try:
        return handler(args)
    except bench.ConfigError as exc:
        print(f"bench-cli: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
