import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aolreg.domain import Dataset
from aolreg.empirical import EmpiricalMetricContext
from aolreg.netpart import build_partition, cell_members


def ctx_of(x, k):
    return EmpiricalMetricContext(Dataset(np.asarray(x), np.zeros(len(x)), k))


def test_partition_of_a_line():
    T = np.array([[0.0], [0.1], [0.5], [0.55], [1.0]])
    p = build_partition(T, 0.2, ctx_of([0], 1))
    assert p.net.center_ids.tolist() == [0, 4, 2]
    assert p.assignment.tolist() == [0, 0, 2, 2, 1]
    assert cell_members(p, 2).tolist() == [2, 3]
    order, offsets = p.cells()
    assert offsets.tolist() == [0, 2, 3, 5]
    assert order.tolist() == [0, 1, 4, 2, 3]


def test_cell_index_out_of_range():
    p = build_partition(np.array([[0.0]]), 0.1, ctx_of([0], 1))
    with pytest.raises(IndexError):
        cell_members(p, 1)
    with pytest.raises(IndexError):
        cell_members(p, -1)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 60), st.integers(1, 5), st.floats(0.05, 0.7))
def test_partition_disjoint_exhaustive_nearest(seed, M, k, eps):
    rng = np.random.default_rng(seed)
    T = rng.random((M, k)).round(1)
    ctx = ctx_of(rng.integers(0, k, size=7), k)
    p = build_partition(T, eps, ctx)
    cells = [cell_members(p, i) for i in range(p.n_cells)]
    allm = np.sort(np.concatenate(cells))
    assert np.array_equal(allm, np.arange(M))
    C = T[p.net.center_ids]
    D = ((T[:, None, :] - C[None]) ** 2) @ ctx.weights
    mine = D[np.arange(M), p.assignment]
    assert np.all(mine <= D.min(axis=1) + 1e-15)
    assert np.all(p.center_dist <= eps + 1e-9)
    # every center sits in its own cell
    assert np.array_equal(p.assignment[p.net.center_ids], np.arange(p.n_cells))
