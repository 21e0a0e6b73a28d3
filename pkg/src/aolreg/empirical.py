"""Empirical distances, risks, greedy covers and Rademacher averages."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .domain import Dataset, Predictor

COVER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMetricContext:
    """The design points of a sample, reduced to atom frequencies.

    ``d_S(f, g)^2 = sum_x w_x (f(x) - g(x))^2`` where ``w_x`` is the share of
    sample points equal to ``x``.
    """

    sample: Dataset

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def weights(self) -> np.ndarray:
        return self.sample.stats.weights

    @property
    def seen(self) -> np.ndarray:
        """Atoms that occur in the sample."""
        return np.flatnonzero(self.sample.stats.counts)

    def distances(self, table: np.ndarray, ref: np.ndarray) -> np.ndarray:
        """``d_S`` between every row of ``table`` and the vector ``ref``."""
        diff = np.asarray(table, dtype=float) - ref
        return np.sqrt(np.maximum((diff * diff) @ self.weights, 0.0))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Predictor) else np.asarray(f, dtype=float)


def _table(members) -> np.ndarray:
    if isinstance(members, np.ndarray):
        return np.asarray(members, dtype=float)
    return np.stack([_values(m) for m in members])


def emp_metric(f, g, ctx: EmpiricalMetricContext) -> float:
    diff = _values(f) - _values(g)
    return float(np.sqrt(max(float(ctx.weights @ (diff * diff)), 0.0)))


def emp_risk(f, d: Dataset) -> float:
    """Mean squared error of ``f`` on ``d``; never below zero."""
    return max(d.stats.risk(_values(f)), 0.0)


def emp_risks(table: np.ndarray, d: Dataset) -> np.ndarray:
    """Empirical risk of every row of a value table."""
    st = d.stats
    T = np.asarray(table, dtype=float)
    r = ((T * T) @ st.counts - 2.0 * (T @ st.sums) + st.sumsq.sum()) / st.n
    return np.maximum(r, 0.0)


@dataclass(frozen=True, eq=False)
class EpsilonNet:
    """Proper net: ``center_ids`` index into the member list it was built from."""

    epsilon: float
    center_ids: np.ndarray
    source: str = "S"

    def __len__(self) -> int:
        return int(self.center_ids.size)


def greedy_cover(members, epsilon: float, ctx: EmpiricalMetricContext, source: str = "S") -> EpsilonNet:
    """Farthest-point greedy net seeded at member 0.

    A member becomes a new center while its distance to the current centers
    exceeds ``epsilon`` (up to a 1e-12 slack); ties go to the lowest index.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    T = _table(members)
    if T.shape[0] == 0:
        raise ValueError("cannot cover an empty member list")
    cols = ctx.seen
    V = np.ascontiguousarray(T[:, cols])
    w = np.ascontiguousarray(ctx.weights[cols])
    ids = kernels.farthest_point_cover(V, w, (epsilon + COVER_TOL) ** 2)
    ids = np.asarray(ids, dtype=np.int64)
    ids.setflags(write=False)
    return EpsilonNet(float(epsilon), ids, source)


class RademacherEstimate(NamedTuple):
    value: float
    stderr: float


def _point_table(members, ctx: EmpiricalMetricContext) -> np.ndarray:
    """Values ``g(z_i)`` for every class member and sample point."""
    if isinstance(members, np.ndarray):
        T = np.asarray(members, dtype=float)
        if T.ndim != 2 or T.shape[1] != ctx.n:
            raise ValueError("a loss table must have one column per sample point")
        return T
    return np.stack([_values(m)[ctx.sample.x] for m in members])


def rademacher_mc(members, ctx: EmpiricalMetricContext, reps: int, rng: np.random.Generator) -> RademacherEstimate:
    """Monte Carlo estimate of ``E sup_g (1/n) sum sigma_i g(z_i)``.

    ``members`` is a list of predictors (evaluated at the sample points) or a
    ready ``(G, n)`` table of values.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    table = np.ascontiguousarray(_point_table(members, ctx))
    signs = rng.choice(np.array([-1.0, 1.0]), size=(reps, table.shape[1]))
    sups = np.asarray(kernels.rademacher_sups(signs, table))
    err = float(sups.std(ddof=1) / np.sqrt(reps)) if reps > 1 else float("inf")
    return RademacherEstimate(float(sups.mean()), err)


def rademacher_exact(table: np.ndarray) -> float:
    """Exact Rademacher average by enumerating all ``2^n`` sign vectors."""
    T = np.asarray(table, dtype=float)
    n = T.shape[1]
    if n > 20:
        raise ValueError("exhaustive enumeration is limited to n <= 20")
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    return float(((signs @ T.T).max(axis=1) / n).mean())
