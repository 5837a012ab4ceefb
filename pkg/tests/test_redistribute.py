import numpy as np
import pytest

from redistfft.decomp import ProcessGrid
from redistfft.plan import gather, scatter
from redistfft.redistribute import (
    DistributedArray,
    cart_subgroups,
    exchange,
    exchange_baseline,
    redistribute,
)
from redistfft.transport import TransportError, run_simulated

from _oracles import random_complex, split_axis


def run_exchange(glob, v, w, M, fn=exchange):
    """A_p: global split along w (aligned in v); returns every B_q."""

    def body(g, r):
        A = split_axis(glob, w, M, r)
        shape = list(glob.shape)
        shape[v] = split_axis(glob, v, M, r).shape[v]
        B = np.full(shape, np.nan + 0j, dtype=glob.dtype)
        fn(g, A, v, B, w)
        return B

    return run_simulated(M, body)


@pytest.mark.parametrize("fn", [exchange, exchange_baseline])
def test_group_of_one(fn):
    glob = random_complex(np.random.default_rng(0), (3, 4, 5))
    (B,) = run_exchange(glob, 1, 0, 1, fn)
    assert np.array_equal(B, glob)


@pytest.mark.parametrize("fn", [exchange, exchange_baseline])
def test_two_by_two_rows_to_columns(fn):
    glob = np.array([[0.0, 1.0], [2.0, 3.0]]) + 0j
    b0, b1 = run_exchange(glob, 1, 0, 2, fn)
    assert np.array_equal(b0, [[0], [2]])
    assert np.array_equal(b1, [[1], [3]])


@pytest.mark.parametrize("fn", [exchange, exchange_baseline])
@pytest.mark.parametrize("v, w", [(1, 0), (0, 1), (2, 1), (1, 2), (2, 0), (0, 2)])
def test_slab_4x12x12_gather_oracle(fn, v, w):
    glob = random_complex(np.random.default_rng(1), (4, 12, 12))
    for q, B in enumerate(run_exchange(glob, v, w, 4, fn)):
        assert np.array_equal(B, split_axis(glob, v, 4, q))


def test_even_chunk_placement():
    # slab chunk (p, c) = rows of rank p, column block c; after the exchange
    # rank c holds chunk (p, c) at row block p
    N, P = 12, 4
    glob = np.zeros((N, N, 2), dtype=complex)
    for p in range(P):
        for c in range(P):
            glob[3 * p:3 * p + 3, 3 * c:3 * c + 3] = 10 * p + c
    for fn in (exchange, exchange_baseline):
        for c, B in enumerate(run_exchange(glob, 1, 0, P, fn)):
            assert B.shape == (N, 3, 2)
            for p in range(P):
                assert np.all(B[3 * p:3 * p + 3] == 10 * p + c)


@pytest.mark.parametrize("shape, M", [((5, 7, 3), 3), ((2, 3, 4), 4), ((1, 9, 2), 6), ((7, 1), 2)])
def test_uneven_and_empty_blocks_agree(shape, M):
    glob = random_complex(np.random.default_rng(2), shape)
    a = run_exchange(glob, 1, 0, M, exchange)
    b = run_exchange(glob, 1, 0, M, exchange_baseline)
    for q, (x, y) in enumerate(zip(a, b)):
        assert x.tobytes() == y.tobytes()
        assert np.array_equal(x, split_axis(glob, 1, M, q))


def test_exchange_rejects_bad_shapes():
    def body(g, r):
        A = np.zeros((2, 4), complex)
        B = np.zeros((3, 2), complex)
        exchange(g, A, 1, B, 0)

    with pytest.raises(ValueError):
        run_simulated(2, body)

    def same_axis(g, r):
        exchange(g, np.zeros((2, 2), complex), 0, np.zeros((2, 2), complex), 0)

    with pytest.raises(ValueError):
        run_simulated(1, same_axis)


def test_distributed_array_validation():
    g = ProcessGrid((2, 2))
    with pytest.raises(ValueError):
        DistributedArray((4, 4, 4), g, (0, 1, None), (0, 0), np.zeros((3, 2, 4), complex))
    with pytest.raises(ValueError):
        DistributedArray((4, 4), g, (0, 1), (0, 0), np.zeros((2, 2), complex))
    with pytest.raises(ValueError):
        DistributedArray((4, 4, 4), g, (0, 0, None), (0, 0), np.zeros((2, 2, 4), complex))


def _redistribute_all(glob, grid, axis_map, v, w, method="subarray", back=False):
    parts = scatter(glob, grid, axis_map)

    def body(world, rank):
        subs = cart_subgroups(world, grid)
        u = parts[rank]
        out = redistribute(u, subs, v, w, method=method)
        used = subs[u.axis_map[w]].members
        if back:
            out = redistribute(out, subs, w, v, method=method)
        return out, used

    return run_simulated(grid.total_ranks, body)


def test_pencil_x_alignment_step():
    # (j0/P0, k1, k2/P1) -> (j0, k1/P0, k2/P1) on a 3x4 grid
    grid = ProcessGrid((3, 4))
    glob = random_complex(np.random.default_rng(3), (12, 12, 12))
    res = _redistribute_all(glob, grid, (0, None, 1), 1, 0)
    outs = [r[0] for r in res]
    assert all(o.axis_map == (None, 0, 1) for o in outs)
    assert res[11][1] == (3, 7, 11)
    assert outs[11].local.shape == (12, 4, 3)
    assert np.array_equal(gather(outs), glob)


def test_slab_is_single_exchange():
    grid = ProcessGrid((4,))
    glob = random_complex(np.random.default_rng(4), (8, 9, 10))
    res = _redistribute_all(glob, grid, (0, None, None), 1, 0)
    assert all(r[1] == (0, 1, 2, 3) for r in res)
    assert np.array_equal(gather([r[0] for r in res]), glob)


@pytest.mark.parametrize("method", ["subarray", "pack"])
def test_4d_middle_step_and_inverse(method):
    # (j0/P0, j1/P1, k2, k3/P2) -> (j0/P0, j1, k2/P1, k3/P2)
    grid = ProcessGrid((2, 2, 2))
    glob = random_complex(np.random.default_rng(5), (5, 7, 6, 4))
    res = _redistribute_all(glob, grid, (0, 1, None, 2), 2, 1, method)
    outs = [r[0] for r in res]
    assert all(o.axis_map == (0, None, 1, 2) for o in outs)
    assert np.array_equal(gather(outs), glob)
    parts = scatter(glob, grid, (0, 1, None, 2))
    back = _redistribute_all(glob, grid, (0, 1, None, 2), 2, 1, method, back=True)
    for p, (o, _) in zip(parts, back):
        assert o.axis_map == p.axis_map
        assert o.local.tobytes() == p.local.tobytes()


def test_redistribute_precondition_errors():
    grid = ProcessGrid((2,))
    parts = scatter(np.zeros((4, 4), complex), grid, (0, None))

    def body(world, rank):
        subs = cart_subgroups(world, grid)
        redistribute(parts[rank], subs, 0, 1)

    with pytest.raises(ValueError):
        run_simulated(2, body)

    def bad_method(world, rank):
        subs = cart_subgroups(world, grid)
        redistribute(parts[rank], subs, 1, 0, method="carrier-pigeon")

    with pytest.raises(ValueError):
        run_simulated(2, bad_method)


def test_mismatched_exchange_shapes_between_ranks():
    # rank-local checks pass but peers disagree on counts
    def body(g, r):
        A = np.zeros((1, 4), complex) if r == 0 else np.zeros((1, 5), complex)
        B = np.zeros((2, 2), complex) if r == 0 else np.zeros((2, 3), complex)
        exchange(g, A, 1, B, 0)

    with pytest.raises((TransportError, ValueError)):
        run_simulated(2, body)
