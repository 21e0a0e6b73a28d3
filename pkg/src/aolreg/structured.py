"""Nets, cells and candidate families for classes too large to list.

Two classes have enough structure to skip enumeration.

Box classes (:class:`BoxSequence`) are products of per-atom grids.  The net is
a product of 1-D covers with per-atom radii ``rho_a`` chosen so that
``sum_a w_a rho_a^2 = epsilon^2``; because the center set is a product, the
Voronoi cell of a member is found atom by atom, every cell is a product of
grid intervals and the least-squares fit inside a cell is separable.

Indicator classes (:class:`VcIndicator`) split the atoms seen in S into a
heavy set H and the rest.  Centers are the supports ``P`` inside H with
``|P| <= d``, and a support ``W`` falls in the cell of ``W & H``.  The light
atoms are chosen so that dropping them moves a member by at most epsilon.

Candidate sets built from these nets are exponentially large but structured,
so the families below implement ERM, the star aggregate and exponential
weights without listing them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .aggregate import segment_ls
from .domain import BoxSequence, Dataset, Mixture, Predictor, VcIndicator

SWEEP_TOL = 1e-12
ACCEPT_TOL = 1e-12


def _lambda_grid() -> np.ndarray:
    lin = np.linspace(0.0, 1.0, 129)[1:]
    geo = 2.0 ** -np.arange(8, 31, dtype=float)
    return np.unique(np.concatenate((geo, lin)))


LAMBDAS = _lambda_grid()


def _pair(f_hat: np.ndarray, g: np.ndarray, lam: float, label: str) -> Predictor:
    a = Predictor(f_hat, label=label)
    if lam <= 0.0:
        return Mixture([a], [1.0], label=label)
    return Mixture([a, Predictor(g)], [1.0 - lam, lam], label=label)


def _fit_cost(counts: np.ndarray, sums: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-option share of ``n`` times the empirical risk, up to a constant."""
    return counts * v * v - 2.0 * sums * v


def _risk_n(values: np.ndarray, d: Dataset) -> float:
    """``n`` times the empirical risk, without the label-square constant."""
    st = d.stats
    return float(st.counts @ (values * values) - 2.0 * (st.sums @ values))


# ---------------------------------------------------------------------------
# product families
# ---------------------------------------------------------------------------


class ProductFamily:
    """Candidates whose value at atom ``a`` is any of ``options[offsets[a]:offsets[a+1]]``."""

    def __init__(self, options: np.ndarray, offsets: np.ndarray, label: str = "product"):
        self.options = np.ascontiguousarray(options, dtype=float)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.lengths = np.diff(self.offsets)
        if np.any(self.lengths < 1):
            raise ValueError("every atom needs at least one option")
        self.atom = np.repeat(np.arange(self.lengths.size), self.lengths)
        self.label = label

    @property
    def support_size(self) -> int:
        return self.lengths.size

    @property
    def size(self) -> int:
        return math.prod(int(c) for c in self.lengths)

    def table(self, budget: int = 100_000) -> np.ndarray:
        """Every candidate, atoms varying lexicographically (small families only)."""
        if self.size > budget:
            raise ValueError(f"{self.size} candidates exceed the budget {budget}")
        grids = [self.options[self.offsets[a]:self.offsets[a + 1]] for a in range(self.support_size)]
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def _pick(self, cost: np.ndarray) -> np.ndarray:
        return self.offsets[:-1] + np.asarray(kernels.segment_argmin(cost, self.offsets))

    def erm_values(self, d: Dataset) -> np.ndarray:
        st = d.stats
        return self.options[self._pick(_fit_cost(st.counts[self.atom], st.sums[self.atom], self.options))]

    def erm(self, d: Dataset) -> Predictor:
        return Predictor(self.erm_values(d), label=self.label)

    def star(self, d: Dataset) -> Predictor:
        st = d.stats
        o = self.options
        nseg = st.counts[self.atom]
        sseg = st.sums[self.atom]
        f_pos = self._pick(_fit_cost(nseg, sseg, o))
        f_hat = o[f_pos]
        diff = o - f_hat[self.atom]
        # cost change at an atom when moving lam of the way towards an option
        L1 = 2.0 * diff * (nseg * f_hat[self.atom] - sseg)
        L2 = nseg * diff * diff
        live = np.flatnonzero(st.counts > 0)
        if live.size == 0:
            return _pair(f_hat, f_hat, 0.0, self.label)
        sub = _SubProduct(self, live)
        l1, l2 = L1[sub.index], L2[sub.index]
        fp = sub.local_pos(f_pos)
        best_lam, best_val = 0.0, 0.0
        for lam in LAMBDAS:
            cost = lam * l1 + lam * lam * l2
            val = float(np.minimum.reduceat(cost, sub.offsets[:-1]).sum())
            if val < best_val:
                best_lam, best_val = float(lam), val
        if best_lam == 0.0:
            return _pair(f_hat, f_hat, 0.0, self.label)
        lam = best_lam
        g = f_hat.copy()
        for _ in range(50):
            pick, cost = sub.best_g(lam, fp, l1, l2)
            g = f_hat.copy()
            g[live] = o[sub.index[pick]]
            new_lam = segment_ls(f_hat, g, d)
            if new_lam == lam:
                break
            lam = new_lam
        r0 = _risk_n(f_hat, d)
        r1 = _risk_n((1.0 - lam) * f_hat + lam * g, d)
        if lam > 0.0 and r1 < r0 - ACCEPT_TOL * st.n:
            return _pair(f_hat, g, lam, self.label)
        return _pair(f_hat, f_hat, 0.0, self.label)

    def ew_values(self, d: Dataset, beta: float) -> np.ndarray:
        st = d.stats
        o = self.options
        logit = -beta * (st.counts[self.atom] * o * o - 2.0 * st.sums[self.atom] * o)
        start = self.offsets[:-1]
        logit = logit - np.maximum.reduceat(logit, start)[self.atom]
        w = np.exp(logit)
        z = np.add.reduceat(w, start)
        return np.add.reduceat(w * o, start) / z

    def ew(self, d: Dataset, beta: float) -> Predictor:
        return Predictor(self.ew_values(d, beta), label=self.label)


class _SubProduct:
    """The part of a product family living on a subset of atoms."""

    def __init__(self, fam: ProductFamily, atoms: np.ndarray):
        lo = fam.offsets[atoms]
        lens = fam.lengths[atoms]
        self.offsets = np.concatenate(([0], np.cumsum(lens))).astype(np.int64)
        rel = np.arange(self.offsets[-1]) - np.repeat(self.offsets[:-1], lens)
        self.index = np.repeat(lo, lens) + rel
        self.atoms = atoms
        self._fam_lo = lo

    def local_pos(self, pos: np.ndarray) -> np.ndarray:
        return self.offsets[:-1] + (pos[self.atoms] - self._fam_lo)

    def best_g(self, lam, fp, l1, l2):
        cost = lam * l1 + lam * lam * l2
        pick = self.offsets[:-1] + np.asarray(kernels.segment_argmin(cost, self.offsets))
        keep = cost[fp] <= cost[pick]
        return np.where(keep, fp, pick), cost


# ---------------------------------------------------------------------------
# box classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoxNet:
    """Product net over a box class and the induced product cells.

    ``values``/``offsets`` are the per-atom grids, ``is_center`` marks center
    values and ``cell`` gives the local 1-D cell of every grid value.
    """

    spec: BoxSequence
    epsilon: float
    values: np.ndarray
    offsets: np.ndarray
    radii: np.ndarray
    is_center: np.ndarray
    cell: np.ndarray
    n_centers: np.ndarray

    @property
    def n_cells(self) -> int:
        return math.prod(int(c) for c in self.n_centers[self.n_centers > 1])

    @property
    def cell_offsets(self) -> np.ndarray:
        """CSR offsets of the 1-D cells over the flat grid (cells are contiguous)."""
        base = np.concatenate(([0], np.cumsum(self.n_centers)))[:-1]
        atom = np.repeat(np.arange(self.n_centers.size), np.diff(self.offsets))
        gid = base[atom] + self.cell
        counts = np.bincount(gid, minlength=int(self.n_centers.sum()))
        return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    def centers(self) -> ProductFamily:
        off = np.concatenate(([0], np.cumsum(self.n_centers))).astype(np.int64)
        return ProductFamily(self.values[self.is_center], off, label="skeleton")

    def cell_erms(self, d: Dataset) -> ProductFamily:
        """Least-squares fit inside every 1-D cell; their product is the set of cell ERMs."""
        st = d.stats
        atom = np.repeat(np.arange(self.n_centers.size), np.diff(self.offsets))
        v = self.values
        cost = _fit_cost(st.counts[atom], st.sums[atom], v)
        coff = self.cell_offsets
        pick = coff[:-1] + np.asarray(kernels.segment_argmin(cost, coff))
        off = np.concatenate(([0], np.cumsum(self.n_centers))).astype(np.int64)
        return ProductFamily(v[pick], off, label="aol")

    def assign(self, member: np.ndarray) -> np.ndarray:
        """Local 1-D cell of a member at every atom (the member must lie on the grid)."""
        pos = np.empty(self.n_centers.size, dtype=np.int64)
        for a in range(pos.size):
            seg = self.values[self.offsets[a]:self.offsets[a + 1]]
            k = int(np.argmin(np.abs(seg - member[a])))
            pos[a] = self.offsets[a] + k
        return self.cell[pos]


def box_radii(weights: np.ndarray, multi: np.ndarray, epsilon: float) -> np.ndarray:
    """Per-atom 1-D cover radii with ``sum_a w_a rho_a^2 = epsilon^2`` over live atoms."""
    live = (weights > 0) & multi
    m = int(live.sum())
    rho = np.full(weights.size, np.inf)
    if m:
        rho[live] = epsilon / np.sqrt(m * weights[live])
    return rho


def box_net(spec: BoxSequence, epsilon: float, s: Dataset) -> BoxNet:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if spec.grid_step is None:
        raise ValueError("grid_step is unresolved")
    vals, off = spec.grid_table()
    w = s.stats.weights
    rho = box_radii(w, np.diff(off) > 1, epsilon)
    is_center, cell, ncent = kernels.sweep_cover(vals, off, rho, SWEEP_TOL)
    return BoxNet(spec, float(epsilon), vals, off, rho, np.asarray(is_center, dtype=bool),
                  np.asarray(cell, dtype=np.int64), np.asarray(ncent, dtype=np.int64))


def box_full_family(spec: BoxSequence) -> ProductFamily:
    vals, off = spec.grid_table()
    return ProductFamily(vals, off, label="erm")


# ---------------------------------------------------------------------------
# indicator classes
# ---------------------------------------------------------------------------


def gains(spec: VcIndicator, d: Dataset) -> np.ndarray:
    """``n`` times the risk decrease from raising each atom from ``base`` to ``base + amplitude``."""
    st = d.stats
    a, b = spec.amplitude, spec.base
    return 2.0 * a * st.sums - st.counts * (2.0 * a * b + a * a)


def _top_order(scores: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    """``atoms`` by decreasing score, ties to the lower atom."""
    order = np.lexsort((atoms, -scores))
    return atoms[order]


def top_gain_support(spec: VcIndicator, d: Dataset, exclude: np.ndarray | None = None, limit: int | None = None) -> np.ndarray:
    """Up to ``limit`` (default ``d``) atoms with the largest positive gains."""
    g = gains(spec, d)
    mask = g > 0
    if exclude is not None and exclude.size:
        mask[exclude] = False
    atoms = np.flatnonzero(mask)
    lim = spec.d if limit is None else limit
    return _top_order(g[atoms], atoms)[:lim]


def heavy_atoms(spec: VcIndicator, epsilon: float, s: Dataset) -> np.ndarray:
    """Atoms of S that stay in the net; the rest are dropped within epsilon.

    The light set is the longest run of lightest seen atoms whose ``d``
    heaviest weights sum to at most ``(epsilon / amplitude)^2``.
    """
    w = s.stats.weights
    seen = np.flatnonzero(w > 0)
    if spec.d == 0 or seen.size == 0:
        return np.empty(0, dtype=np.int64)
    order = seen[np.lexsort((seen, w[seen]))]
    cs = np.concatenate(([0.0], np.cumsum(w[order])))
    L = np.arange(order.size + 1)
    top = cs[L] - cs[np.maximum(L - spec.d, 0)]
    budget = (epsilon / spec.amplitude) ** 2 + 1e-12
    light = int(np.flatnonzero(top <= budget).max())
    return np.sort(order[light:])


@dataclass(frozen=True, eq=False)
class VcNet:
    spec: VcIndicator
    epsilon: float
    heavy: np.ndarray

    @property
    def n_cells(self) -> int:
        h = self.heavy.size
        return sum(math.comb(h, m) for m in range(min(self.spec.d, h) + 1))

    def assign(self, support) -> tuple[int, ...]:
        """Center of the cell holding support ``W``: its heavy part."""
        return tuple(sorted(set(int(x) for x in support) & set(self.heavy.tolist())))

    def centers(self) -> "SupportFamily":
        return SupportFamily(self.spec, self.heavy, np.empty(0, dtype=np.int64), label="skeleton")

    def cell_erms(self, d: Dataset) -> "SupportFamily":
        fill = top_gain_support(self.spec, d, exclude=self.heavy)
        return SupportFamily(self.spec, self.heavy, fill, label="aol")


def vc_net(spec: VcIndicator, epsilon: float, s: Dataset) -> VcNet:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return VcNet(spec, float(epsilon), heavy_atoms(spec, epsilon, s))


class SupportFamily:
    """Supports ``P | fill[:d - |P|]`` for every ``P`` inside ``free`` with ``|P| <= d``.

    ``fill`` is an ordered list of atoms outside ``free``.
    """

    def __init__(self, spec: VcIndicator, free: np.ndarray, fill: np.ndarray, label: str = "support"):
        self.spec = spec
        self.free = np.asarray(free, dtype=np.int64)
        self.fill = np.asarray(fill, dtype=np.int64)
        self.label = label
        self.max_free = min(spec.d, self.free.size)

    @property
    def size(self) -> int:
        return sum(math.comb(self.free.size, m) for m in range(self.max_free + 1))

    def support(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=np.int64)
        return np.concatenate((P, self.fill[: max(self.spec.d - P.size, 0)]))

    def table(self, budget: int = 100_000) -> np.ndarray:
        """Every candidate, ordered by ``|P|`` then lexicographically."""
        if self.size > budget:
            raise ValueError(f"{self.size} candidates exceed the budget {budget}")
        rows = []
        for m in range(self.max_free + 1):
            for P in itertools.combinations(self.free.tolist(), m):
                rows.append(self.spec.indicator(self.support(P)))
        return np.stack(rows)

    def _values(self, W) -> np.ndarray:
        return self.spec.indicator(W)

    def _best(self, score: np.ndarray) -> np.ndarray:
        """Support maximizing the total score of its atoms."""
        free_order = _top_order(score[self.free], self.free)
        head = np.cumsum(np.concatenate(([0.0], score[free_order[: self.max_free]])))
        fill_cs = np.cumsum(np.concatenate(([0.0], score[self.fill])))
        ms = np.arange(self.max_free + 1)
        tail = fill_cs[np.minimum(self.spec.d - ms, self.fill.size)]
        m = int(np.argmax(head + tail))
        return self.support(np.sort(free_order[:m]))

    def erm(self, d: Dataset) -> Predictor:
        return Predictor(self._values(self._best(gains(self.spec, d))), label=self.label)

    def star(self, d: Dataset) -> Predictor:
        st = d.stats
        a, b = self.spec.amplitude, self.spec.base
        W0 = self._best(gains(self.spec, d))
        f_hat = self._values(W0)
        in0 = np.zeros(self.spec.universe_size)
        in0[W0] = 1.0
        atoms = np.unique(np.concatenate((self.free, self.fill)))
        n_x, s_x, i0 = st.counts[atoms], st.sums[atoms], in0[atoms]

        def score_at(lam):
            v_in = b + a * ((1.0 - lam) * i0 + lam)
            v_out = b + a * (1.0 - lam) * i0
            sc = np.zeros(self.spec.universe_size)
            sc[atoms] = (n_x * v_out * v_out - 2 * s_x * v_out) - (n_x * v_in * v_in - 2 * s_x * v_in)
            return sc

        def total(lam, W):
            g = self._values(W)
            return _risk_n((1.0 - lam) * f_hat + lam * g, d)

        r0 = _risk_n(f_hat, d)
        best_lam, best_val, best_W = 0.0, r0, W0
        for lam in LAMBDAS:
            W = self._best(score_at(lam))
            val = total(lam, W)
            if val < best_val:
                best_lam, best_val, best_W = float(lam), val, W
        if best_lam == 0.0:
            return _pair(f_hat, f_hat, 0.0, self.label)
        lam, W = best_lam, best_W
        for _ in range(50):
            new_lam = segment_ls(f_hat, self._values(W), d)
            if new_lam <= 0.0:
                break
            new_W = self._best(score_at(new_lam))
            if new_lam == lam and np.array_equal(new_W, W):
                break
            if total(new_lam, new_W) >= total(lam, W):
                break
            lam, W = new_lam, new_W
        g = self._values(W)
        if total(lam, W) < r0 - ACCEPT_TOL * st.n:
            return _pair(f_hat, g, lam, self.label)
        return _pair(f_hat, f_hat, 0.0, self.label)

    def inclusion_probs(self, d: Dataset, beta: float) -> np.ndarray:
        """Exponential-weights probability that each atom is in the support."""
        G = beta * gains(self.spec, d)
        D = self.spec.d
        mf = self.max_free
        z = G[self.free]
        h = z.size
        fill_cs = np.cumsum(np.concatenate(([0.0], G[self.fill])))
        ms = np.arange(mf + 1)
        tail = fill_cs[np.minimum(D - ms, self.fill.size)]
        # log elementary symmetric sums, prefix and suffix over the free atoms
        pre = np.full((h + 1, mf + 1), -np.inf)
        pre[0, 0] = 0.0
        for i in range(h):
            pre[i + 1] = pre[i]
            pre[i + 1, 1:] = np.logaddexp(pre[i, 1:], pre[i, :-1] + z[i])
        suf = np.full((h + 1, mf + 1), -np.inf)
        suf[h, 0] = 0.0
        for i in range(h - 1, -1, -1):
            suf[i] = suf[i + 1]
            suf[i, 1:] = np.logaddexp(suf[i + 1, 1:], suf[i + 1, :-1] + z[i])
        log_e = pre[h]
        logZ = np.logaddexp.reduce(log_e + tail)
        prob = np.zeros(self.spec.universe_size)
        if h and mf:
            # e_{m-1} without atom i, for m = 1..mf
            loo = np.full((h, mf), -np.inf)
            for m in range(mf):
                parts = [pre[:h, j] + suf[1:, m - j] for j in range(m + 1)]
                loo[:, m] = np.logaddexp.reduce(np.stack(parts), axis=0)
            terms = z[:, None] + loo + tail[None, 1:] - logZ
            prob[self.free] = np.exp(np.logaddexp.reduce(terms, axis=1))
        for t, x in enumerate(self.fill):
            hit = (D - ms) > t
            if hit.any():
                prob[x] = np.exp(np.logaddexp.reduce(log_e[hit] + tail[hit]) - logZ)
        return np.clip(prob, 0.0, 1.0)

    def ew(self, d: Dataset, beta: float) -> Predictor:
        prob = self.inclusion_probs(d, beta)
        return Predictor(self.spec.base + self.spec.amplitude * prob, label=self.label)


def vc_global_erm(spec: VcIndicator, d: Dataset) -> Predictor:
    return Predictor(spec.indicator(top_gain_support(spec, d)), label="erm")
