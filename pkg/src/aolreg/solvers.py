"""Least-squares solvers: enumeration, cell-restricted enumeration, simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .domain import Dataset, Member, Mixture, Predictor
from .empirical import _table, emp_risk, emp_risks


@dataclass(frozen=True, eq=False)
class ErmResult:
    """A fitted least-squares solution and how far it is from the true minimizer.

    ``certificate`` is ``"exact-enumeration"``, ``"refinement-net"`` (with
    ``resolution`` set to the proxy grid resolution) or ``"fw-gap"`` (with
    ``gap`` set to the final Frank-Wolfe duality gap).
    """

    predictor: Predictor
    empirical_risk: float
    certificate: str
    index: int | None = None
    gap: float | None = None
    resolution: float | None = None
    converged: bool = True
    iterations: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def _as_member(candidates, i: int, T: np.ndarray) -> Predictor:
    if isinstance(candidates, np.ndarray):
        return Member(T[i], index=i)
    return candidates[i]


def erm_enumerate(candidates, d: Dataset) -> ErmResult:
    """Candidate with the smallest empirical risk; ties go to the lowest index."""
    T = _table(candidates)
    if T.shape[0] == 0:
        raise ValueError("no candidates")
    risks = emp_risks(T, d)
    i = int(np.argmin(risks))
    pred = _as_member(candidates, i, T)
    return ErmResult(pred, emp_risk(pred, d), "exact-enumeration", index=i)


def erm_cell(members, cell, d: Dataset, resolution: float | None = None) -> ErmResult:
    """ERM over ``members[cell]``; ``index`` refers to the full member list."""
    idx = np.asarray(cell, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty cell")
    T = _table(members)
    risks = emp_risks(T[idx], d)
    j = int(idx[np.argmin(risks)])
    pred = _as_member(members, j, T)
    return ErmResult(pred, emp_risk(pred, d), "refinement-net", index=j, resolution=resolution)


def default_max_iter(m: int, n: int) -> int:
    return int(10 * m * math.log(max(n, 2))) + 100


def simplex_problem(A: np.ndarray, d: Dataset):
    """Quadratic form ``(Q, b, c)`` of the empirical risk of ``theta @ A``."""
    st = d.stats
    w = st.counts / st.n
    Q = (A * w) @ A.T
    b = A @ (st.sums / st.n)
    c = float(st.sumsq.sum() / st.n)
    return Q, b, c


def erm_simplex(dictionary, support, d: Dataset, tol: float = 1e-6, max_iter: int | None = None) -> ErmResult:
    """Least squares over convex combinations of ``dictionary[support]``.

    Away-step Frank-Wolfe started from the best single vertex, with exact line
    search.  If ``max_iter`` runs out first the result has ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    D = _table(dictionary)
    nu = np.asarray(support, dtype=np.int64)
    if nu.size == 0:
        raise ValueError("support must be non-empty")
    A = np.ascontiguousarray(D[nu])
    Q, b, c = simplex_problem(A, d)
    m = nu.size
    if max_iter is None:
        max_iter = default_max_iter(m, d.n)
    theta0 = np.zeros(m)
    theta0[int(np.argmin(np.diag(Q) - 2.0 * b))] = 1.0
    theta, gap, iters, trace = kernels.frank_wolfe(Q, b, c, theta0, tol, max_iter)
    theta = np.asarray(theta)
    comps = [Member(D[j], index=int(j)) for j in nu]
    pred = Mixture(comps, theta)
    return ErmResult(
        pred,
        emp_risk(pred, d),
        "fw-gap",
        gap=float(gap),
        converged=bool(gap <= tol),
        iterations=int(iters),
        trace=np.asarray(trace),
    )
