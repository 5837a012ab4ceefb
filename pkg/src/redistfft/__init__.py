"""Parallel multidimensional FFTs on distributed dense arrays.

Every global redistribution is a single generalized all-to-all of subarray
regions; a traditional transpose-and-alltoall path is kept alongside for
comparison. Ranks run on an in-process simulated transport.
"""
from .decomp import Block, ProcessGrid, decompose, dims_create, grid_create
from .dense import ElemKind, read_nda, write_nda
from .fft import Direction, dft_oracle, dftn_oracle, fft, partial_transform
from .plan import Plan, execute, gather, make_plan, parallel_transform, scatter
from .redistribute import (
    DistributedArray,
    cart_subgroups,
    exchange,
    exchange_baseline,
    redistribute,
)
from .subarray import SubarrayLayout, subarray_sequence
from .transport import Group, run_simulated

__version__ = "0.1.0"

__all__ = [
    "Block",
    "ProcessGrid",
    "decompose",
    "dims_create",
    "grid_create",
    "ElemKind",
    "read_nda",
    "write_nda",
    "Direction",
    "dft_oracle",
    "dftn_oracle",
    "fft",
    "partial_transform",
    "Plan",
    "execute",
    "gather",
    "make_plan",
    "parallel_transform",
    "scatter",
    "DistributedArray",
    "cart_subgroups",
    "exchange",
    "exchange_baseline",
    "redistribute",
    "SubarrayLayout",
    "subarray_sequence",
    "Group",
    "run_simulated",
]
