"""Hot loops, each in two flavours: a numba-compiled loop and a numpy version.

The public names at the bottom of this module are bound to the numba
implementations unless ``AOLREG_DISABLE_NUMBA`` is set to a truthy value (or
numba cannot be imported), in which case the numpy versions are used.  Both
flavours are always importable under their ``_nb`` / ``_np`` names so that the
test-suite and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
_DISABLED = os.environ.get("AOLREG_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def _jit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# farthest-point greedy cover under a weighted squared l2 distance
# ---------------------------------------------------------------------------


@_jit
def _cover_nb(V, w, thresh2):
    M, k = V.shape
    mind = np.empty(M)
    for i in range(M):
        s = 0.0
        for a in range(k):
            diff = V[i, a] - V[0, a]
            s += w[a] * diff * diff
        mind[i] = s
    centers = np.empty(M, np.int64)
    centers[0] = 0
    nc = 1
    while True:
        best = -1.0
        bi = -1
        for i in range(M):
            if mind[i] > best:
                best = mind[i]
                bi = i
        if best <= thresh2:
            break
        centers[nc] = bi
        nc += 1
        for i in range(M):
            s = 0.0
            for a in range(k):
                diff = V[i, a] - V[bi, a]
                s += w[a] * diff * diff
            if s < mind[i]:
                mind[i] = s
    return centers[:nc]


def _wdist2_np(V, ref, w):
    # column by column, in the compiled loop's order, so ties match exactly
    out = np.zeros(V.shape[0])
    for a in range(V.shape[1]):
        diff = V[:, a] - ref[a]
        out += w[a] * diff * diff
    return out


def _cover_np(V, w, thresh2):
    mind = _wdist2_np(V, V[0], w)
    centers = [0]
    while True:
        bi = int(np.argmax(mind))
        if mind[bi] <= thresh2:
            break
        centers.append(bi)
        np.minimum(mind, _wdist2_np(V, V[bi], w), out=mind)
    return np.asarray(centers, dtype=np.int64)


# ---------------------------------------------------------------------------
# nearest-center assignment, ties to the lowest center position
# ---------------------------------------------------------------------------


@_jit
def _assign_nb(V, C, w):
    M, k = V.shape
    nc = C.shape[0]
    out = np.empty(M, np.int64)
    dist = np.empty(M)
    for i in range(M):
        best = np.inf
        bj = 0
        for j in range(nc):
            s = 0.0
            for a in range(k):
                diff = V[i, a] - C[j, a]
                s += w[a] * diff * diff
            if s < best:
                best = s
                bj = j
        out[i] = bj
        dist[i] = best
    return out, dist


def _assign_np(V, C, w, chunk=4096):
    M = V.shape[0]
    out = np.empty(M, np.int64)
    dist = np.empty(M)
    for lo in range(0, M, chunk):
        blk = V[lo:lo + chunk]
        # accumulate atom by atom, in the same order as the compiled loop, so
        # that exact ties resolve identically in both backends
        d2 = np.zeros((blk.shape[0], C.shape[0]))
        for a in range(V.shape[1]):
            diff = blk[:, a, None] - C[None, :, a]
            d2 += w[a] * diff * diff
        j = np.argmin(d2, axis=1)
        out[lo:lo + chunk] = j
        dist[lo:lo + chunk] = d2[np.arange(len(j)), j]
    return out, dist


# ---------------------------------------------------------------------------
# argmin inside contiguous segments (CSR layout), ties to the first entry
# ---------------------------------------------------------------------------


@_jit
def _segment_argmin_nb(costs, offsets):
    m = offsets.shape[0] - 1
    out = np.empty(m, np.int64)
    for s in range(m):
        lo = offsets[s]
        hi = offsets[s + 1]
        best = costs[lo]
        bi = 0
        for t in range(lo + 1, hi):
            if costs[t] < best:
                best = costs[t]
                bi = t - lo
        out[s] = bi
    return out


def _segment_argmin_np(costs, offsets):
    m = offsets.shape[0] - 1
    if m == 0:
        return np.empty(0, np.int64)
    lengths = np.diff(offsets)
    seg = np.repeat(np.arange(m), lengths)
    mins = np.minimum.reduceat(costs, offsets[:-1])
    hit = costs == mins[seg]
    pos = np.arange(costs.shape[0]) - offsets[seg]
    pos = np.where(hit, pos, np.iinfo(np.int64).max)
    return np.minimum.reduceat(pos, offsets[:-1]).astype(np.int64)


# ---------------------------------------------------------------------------
# away-step Frank-Wolfe for  min_{theta in simplex} theta'Q theta - 2 b'theta + c
# ---------------------------------------------------------------------------


@_jit
def _fw_nb(Q, b, c, theta0, tol, max_iter):
    m = b.shape[0]
    theta = theta0.copy()
    Qt = Q @ theta
    trace = np.empty(max_iter + 1)
    obj = theta @ Qt - 2.0 * (b @ theta) + c
    trace[0] = obj
    gap = np.inf
    it = 0
    grad = np.empty(m)
    while True:
        for i in range(m):
            grad[i] = 2.0 * (Qt[i] - b[i])
        s = 0
        for i in range(1, m):
            if grad[i] < grad[s]:
                s = i
        gtheta = grad @ theta
        gap = gtheta - grad[s]
        if gap < 0.0:
            gap = 0.0
        if gap <= tol or it >= max_iter:
            break
        v = -1
        for i in range(m):
            if theta[i] > 0.0 and (v < 0 or grad[i] > grad[v]):
                v = i
        away_gain = grad[v] - gtheta
        d = np.zeros(m)
        if gap >= away_gain or theta[v] >= 1.0:
            d -= theta
            d[s] += 1.0
            tmax = 1.0
        else:
            d += theta
            d[v] -= 1.0
            tmax = theta[v] / (1.0 - theta[v])
        Qd = Q @ d
        curv = d @ Qd
        slope = grad @ d
        if curv > 0.0:
            t = -slope / (2.0 * curv)
        else:
            t = tmax
        if t > tmax:
            t = tmax
        if t < 0.0:
            t = 0.0
        new_obj = obj + t * slope + t * t * curv
        it += 1
        if t == 0.0 or new_obj > obj:
            trace[it] = obj
            break
        theta += t * d
        for i in range(m):
            if theta[i] < 1e-15:
                theta[i] = 0.0
        theta /= theta.sum()
        Qt = Q @ theta
        obj = theta @ Qt - 2.0 * (b @ theta) + c
        trace[it] = obj
    return theta, gap, it, trace[: it + 1]


def _fw_np(Q, b, c, theta0, tol, max_iter):
    theta = np.array(theta0, dtype=float)
    Qt = Q @ theta
    obj = float(theta @ Qt - 2.0 * b @ theta + c)
    trace = [obj]
    it = 0
    while True:
        grad = 2.0 * (Qt - b)
        s = int(np.argmin(grad))
        gtheta = float(grad @ theta)
        gap = max(gtheta - grad[s], 0.0)
        if gap <= tol or it >= max_iter:
            break
        active = np.flatnonzero(theta > 0.0)
        v = int(active[np.argmax(grad[active])])
        if gap >= grad[v] - gtheta or theta[v] >= 1.0:
            d = -theta.copy()
            d[s] += 1.0
            tmax = 1.0
        else:
            d = theta.copy()
            d[v] -= 1.0
            tmax = theta[v] / (1.0 - theta[v])
        curv = float(d @ Q @ d)
        slope = float(grad @ d)
        t = -slope / (2.0 * curv) if curv > 0.0 else tmax
        t = min(max(t, 0.0), tmax)
        new_obj = obj + t * slope + t * t * curv
        it += 1
        if t == 0.0 or new_obj > obj:
            trace.append(obj)
            break
        theta = theta + t * d
        theta[theta < 1e-15] = 0.0
        theta /= theta.sum()
        Qt = Q @ theta
        obj = float(theta @ Qt - 2.0 * b @ theta + c)
        trace.append(obj)
    return theta, gap, it, np.asarray(trace)


# ---------------------------------------------------------------------------
# greedy Hamming packing: keep a row iff it is >= d away from every kept row
# ---------------------------------------------------------------------------


@_jit
def _pack_nb(B, d):
    C, k = B.shape
    kept = np.empty(C, np.int64)
    nk = 0
    for i in range(C):
        ok = True
        for t in range(nk):
            j = kept[t]
            h = 0
            for a in range(k):
                if B[i, a] != B[j, a]:
                    h += 1
            if h < d:
                ok = False
                break
        if ok:
            kept[nk] = i
            nk += 1
    return kept[:nk]


def _pack_np(B, d):
    kept = []
    for i in range(B.shape[0]):
        if kept:
            h = (B[kept] != B[i]).sum(axis=1)
            if h.min() < d:
                continue
        kept.append(i)
    return np.asarray(kept, dtype=np.int64)


# ---------------------------------------------------------------------------
# Rademacher suprema: for each sign vector, max over rows of the mean of sigma*g
# ---------------------------------------------------------------------------


@_jit
def _rad_sups_nb(signs, table):
    R, n = signs.shape
    P = np.dot(signs, np.ascontiguousarray(table.T))
    out = np.empty(R)
    for r in range(R):
        out[r] = P[r].max() / n
    return out


def _rad_sups_np(signs, table):
    return (signs @ table.T).max(axis=1) / signs.shape[1]


# ---------------------------------------------------------------------------
# 1-D sweep covers: per segment of sorted values, pick centers left to right so
# that every value is within rho[a] of one, then assign values to the nearest
# center (ties to the lower one).  rho[a] = inf means one center at the bottom.
# ---------------------------------------------------------------------------


@_jit
def _sweep_nb(vals, offsets, rho, tol):
    K = offsets.shape[0] - 1
    total = vals.shape[0]
    is_center = np.zeros(total, np.bool_)
    cell = np.zeros(total, np.int64)
    ncent = np.zeros(K, np.int64)
    cpos = np.empty(total, np.int64)
    for a in range(K):
        lo = offsets[a]
        hi = offsets[a + 1]
        if not rho[a] < np.inf:
            is_center[lo] = True
            ncent[a] = 1
            continue
        nc = 0
        i = lo
        while i < hi:
            lim = vals[i] + rho[a] + tol
            j = i
            while j + 1 < hi and vals[j + 1] <= lim:
                j += 1
            is_center[j] = True
            cpos[nc] = j
            nc += 1
            lim = vals[j] + rho[a] + tol
            i = j + 1
            while i < hi and vals[i] <= lim:
                i += 1
        ncent[a] = nc
        q = 0
        for t in range(lo, hi):
            while q + 1 < nc and cpos[q + 1] <= t:
                q += 1
            c = q
            if t > cpos[q] and q + 1 < nc:
                if vals[cpos[q + 1]] - vals[t] < vals[t] - vals[cpos[q]]:
                    c = q + 1
            cell[t] = c
    return is_center, cell, ncent


def _sweep_np(vals, offsets, rho, tol):
    K = offsets.shape[0] - 1
    is_center = np.zeros(vals.shape[0], dtype=bool)
    cell = np.zeros(vals.shape[0], dtype=np.int64)
    ncent = np.zeros(K, dtype=np.int64)
    for a in range(K):
        lo, hi = int(offsets[a]), int(offsets[a + 1])
        seg = vals[lo:hi]
        if not rho[a] < np.inf:
            is_center[lo] = True
            ncent[a] = 1
            continue
        centers = []
        i = 0
        while i < seg.size:
            j = int(np.searchsorted(seg, seg[i] + rho[a] + tol, side="right")) - 1
            centers.append(j)
            i = int(np.searchsorted(seg, seg[j] + rho[a] + tol, side="right"))
        c = np.asarray(centers)
        is_center[lo + c] = True
        ncent[a] = c.size
        d = np.abs(seg[:, None] - seg[c][None, :])
        cell[lo:hi] = np.argmin(d, axis=1)
    return is_center, cell, ncent


if USE_NUMBA:
    farthest_point_cover = _cover_nb
    nearest_center = _assign_nb
    segment_argmin = _segment_argmin_nb
    frank_wolfe = _fw_nb
    hamming_pack = _pack_nb
    rademacher_sups = _rad_sups_nb
    sweep_cover = _sweep_nb
else:
    farthest_point_cover = _cover_np
    nearest_center = _assign_np
    segment_argmin = _segment_argmin_np
    frank_wolfe = _fw_np
    hamming_pack = _pack_np
    rademacher_sups = _rad_sups_np
    sweep_cover = _sweep_np

BACKEND = "numba" if USE_NUMBA else "numpy"
