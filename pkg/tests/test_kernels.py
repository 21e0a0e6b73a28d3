import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aolreg import kernels

pytestmark = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40), st.integers(1, 6), st.floats(0.01, 1.0))
def test_cover_backends_agree(seed, M, k, eps):
    rng = np.random.default_rng(seed)
    V = rng.random((M, k)).round(2)
    w = rng.dirichlet(np.ones(k))
    a = kernels._cover_nb(V, w, eps * eps)
    b = kernels._cover_np(V, w, eps * eps)
    assert np.array_equal(a, b)
    assert a[0] == 0


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40), st.integers(1, 8), st.integers(1, 6))
def test_nearest_center_backends_agree(seed, M, C, k):
    rng = np.random.default_rng(seed)
    V = rng.random((M, k)).round(1)
    cen = V[rng.integers(0, M, size=C)]
    w = rng.dirichlet(np.ones(k))
    a1, d1 = kernels._assign_nb(V, cen, w)
    a2, d2 = kernels._assign_np(V, cen, w)
    assert np.array_equal(a1, a2)
    assert np.allclose(d1, d2, atol=1e-14)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=10), st.integers(0, 2 ** 32 - 1))
def test_segment_argmin_backends_agree(sizes, seed):
    sizes = [s + 1 for s in sizes]
    rng = np.random.default_rng(seed)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    costs = rng.integers(0, 4, size=offsets[-1]).astype(float)
    a = kernels._segment_argmin_nb(costs, offsets)
    b = kernels._segment_argmin_np(costs, offsets)
    assert np.array_equal(a, b)
    for i in range(len(sizes)):
        seg = costs[offsets[i]:offsets[i + 1]]
        assert a[i] == np.argmin(seg)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_frank_wolfe_backends_agree(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.random((m, 7))
    w = rng.dirichlet(np.ones(7))
    Q = (A * w) @ A.T
    b = A @ (w * rng.random(7))
    th0 = np.zeros(m)
    th0[0] = 1.0
    r1 = kernels._fw_nb(Q, b, 0.3, th0, 1e-9, 2000)
    r2 = kernels._fw_np(Q, b, 0.3, th0, 1e-9, 2000)
    assert np.allclose(r1[0], r2[0], atol=1e-7)
    assert abs(r1[3][-1] - r2[3][-1]) < 1e-12
    assert np.all(np.diff(r1[3]) <= 1e-15)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 30), st.integers(1, 8), st.integers(1, 5))
def test_hamming_pack_backends_agree(seed, C, k, d):
    B = np.random.default_rng(seed).integers(0, 2, size=(C, k)).astype(np.uint8)
    a = kernels._pack_nb(B, d)
    b = kernels._pack_np(B, d)
    assert np.array_equal(a, b)
    kept = B[a]
    for i in range(len(kept)):
        for j in range(i):
            assert (kept[i] != kept[j]).sum() >= d


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 20), st.integers(1, 6), st.integers(1, 10))
def test_rademacher_sups_backends_agree(seed, R, G, n):
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(R, n))
    T = rng.random((G, n))
    assert np.allclose(kernels._rad_sups_nb(signs, T), kernels._rad_sups_np(signs, T))


@given(st.integers(0, 2 ** 32 - 1), st.lists(st.integers(1, 12), min_size=1, max_size=6))
def test_sweep_backends_agree_and_cover(seed, sizes):
    rng = np.random.default_rng(seed)
    segs = [np.sort(rng.random(s).round(2)) for s in sizes]
    vals = np.concatenate(segs)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    rho = rng.uniform(0.0, 0.5, size=len(sizes))
    rho[rng.random(len(sizes)) < 0.2] = np.inf
    a = kernels._sweep_nb(vals, offsets, rho, 1e-12)
    b = kernels._sweep_np(vals, offsets, rho, 1e-12)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    is_center, cell, ncent = a
    for s in range(len(sizes)):
        seg = vals[offsets[s]:offsets[s + 1]]
        cen = seg[is_center[offsets[s]:offsets[s + 1]]]
        assert cen.size == ncent[s]
        mine = cen[cell[offsets[s]:offsets[s + 1]]]
        dist = np.abs(seg - mine)
        assert np.all(dist <= np.abs(seg[:, None] - cen[None, :]).min(axis=1) + 1e-15)
        if np.isfinite(rho[s]):
            assert dist.max() <= rho[s] + 1e-12


def test_backend_name_matches_binding():
    assert kernels.BACKEND in ("numba", "numpy")
    expected = kernels._fw_nb if kernels.USE_NUMBA else kernels._fw_np
    assert kernels.frank_wolfe is expected


def test_env_var_selects_numpy_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, AOLREG_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from aolreg import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
