"""Full estimation procedures built from nets, cell fits and aggregation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels, structured
from .aggregate import AggregatorSpec, ms_aggregate
from .bounds import exact_power
from .domain import (
    BoxSequence,
    Dataset,
    DictionaryHull,
    FiniteList,
    FunctionSpec,
    Member,
    MemberBudgetError,
    Predictor,
    VcIndicator,
    member_table,
    resolve_grid_step,
    split_threeway,
)
from .empirical import EmpiricalMetricContext, emp_risk, emp_risks
from .netpart import build_partition
from .solvers import erm_enumerate, erm_simplex

DEFAULT_BUDGET = 200_000


def epsilon_rule(regime, n: int) -> float:
    """Net radius for a sample of size ``n``.

    ``regime`` is a positive number (used as is), ``"vc"`` for ``n^(-1/2)``,
    or ``("poly", p)`` / ``{"kind": "poly", "p": p}`` for ``n^(-1/(2+p))``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(regime, dict):
        kind = regime.get("kind")
        if kind == "explicit":
            return epsilon_rule(float(regime["value"]), n)
        if kind == "poly":
            return epsilon_rule(("poly", regime["p"]), n)
        if kind == "vc":
            return epsilon_rule("vc", n)
        raise ValueError(f"unknown epsilon rule {regime!r}")
    if isinstance(regime, str):
        if regime == "vc":
            return exact_power(n, -0.5)
        if regime.startswith("poly:"):
            return epsilon_rule(("poly", float(regime[5:])), n)
        raise ValueError(f"unknown epsilon rule {regime!r}")
    if isinstance(regime, (tuple, list)):
        kind, p = regime
        if kind != "poly":
            raise ValueError(f"unknown epsilon rule {regime!r}")
        if not p > 0:
            raise ValueError("p must be positive")
        return exact_power(n, -1.0 / (2.0 + p))
    eps = float(regime)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    return eps


@dataclass(frozen=True)
class AolConfig:
    epsilon: Any = "vc"
    aggregator: AggregatorSpec = field(default_factory=AggregatorSpec)
    member_budget: int = DEFAULT_BUDGET
    grid_step: float | None = None
    backend: str = "auto"

    def __post_init__(self):
        if self.backend not in ("auto", "explicit", "structured"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if isinstance(self.epsilon, (int, float)) and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(eq=False)
class FitRecord:
    predictor: Predictor
    n_cells: int
    epsilon: float
    cell_risks: np.ndarray | None
    wall_ms: float
    method: str
    extras: dict = field(default_factory=dict)


def _structured(spec: FunctionSpec, backend: str) -> bool:
    if isinstance(spec, FiniteList):
        if backend == "structured":
            raise ValueError("finite lists have no structured backend")
        return False
    if isinstance(spec, (BoxSequence, VcIndicator)):
        return backend != "explicit"
    if isinstance(spec, DictionaryHull):
        raise MemberBudgetError(spec.pattern_count(), 0, "a dictionary hull is not enumerable; use sparse_convex_fit")
    raise TypeError(f"unsupported class {type(spec).__name__}")


def _prepare(spec: FunctionSpec, eps: float, grid_step: float | None) -> FunctionSpec:
    if isinstance(spec, BoxSequence):
        return resolve_grid_step(spec, eps, grid_step)
    return spec


def _net(spec, eps, s):
    if isinstance(spec, BoxSequence):
        return structured.box_net(spec, eps, s)
    return structured.vc_net(spec, eps, s)


def _members(table: np.ndarray, idx) -> list[Member]:
    return [Member(table[i], index=int(i)) for i in idx]


def aol_fit(spec: FunctionSpec, d: Dataset, cfg: AolConfig = AolConfig()) -> FitRecord:
    """Aggregation of leaders: net on S, cell-wise least squares on S', aggregation on S''."""
    t0 = time.perf_counter()
    split = split_threeway(d)
    eps = epsilon_rule(cfg.epsilon, split.s.n)
    use_struct = _structured(spec, cfg.backend)
    spec = _prepare(spec, eps, cfg.grid_step)
    if use_struct:
        net = _net(spec, eps, split.s)
        family = net.cell_erms(split.s_prime)
        pred = ms_aggregate(cfg.aggregator, family, split.s_dprime)
        n_cells, cell_risks = net.n_cells, None
    else:
        T = member_table(spec, cfg.member_budget)
        part = build_partition(T, eps, EmpiricalMetricContext(split.s))
        order, offsets = part.cells()
        risks = emp_risks(T, split.s_prime)
        best = order[offsets[:-1] + np.asarray(kernels.segment_argmin(risks[order], offsets))]
        pred = ms_aggregate(cfg.aggregator, _members(T, best), split.s_dprime)
        n_cells, cell_risks = part.n_cells, risks[best]
    ms = (time.perf_counter() - t0) * 1e3
    return FitRecord(pred, n_cells, eps, cell_risks, ms, "aol")


def skeleton_fit(spec: FunctionSpec, d: Dataset, epsilon, aggregator: AggregatorSpec = AggregatorSpec(),
                 member_budget: int = DEFAULT_BUDGET, grid_step: float | None = None,
                 backend: str = "auto") -> FitRecord:
    """Aggregate the net centers directly on S''; S' is not used."""
    t0 = time.perf_counter()
    split = split_threeway(d)
    eps = epsilon_rule(epsilon, split.s.n)
    use_struct = _structured(spec, backend)
    spec = _prepare(spec, eps, grid_step)
    if use_struct:
        net = _net(spec, eps, split.s)
        pred = ms_aggregate(aggregator, net.centers(), split.s_dprime)
        n_cells = net.n_cells
    else:
        T = member_table(spec, member_budget)
        part = build_partition(T, eps, EmpiricalMetricContext(split.s))
        pred = ms_aggregate(aggregator, _members(T, part.net.center_ids), split.s_dprime)
        n_cells = part.n_cells
    ms = (time.perf_counter() - t0) * 1e3
    return FitRecord(pred, n_cells, eps, None, ms, "skeleton")


def global_erm_fit(spec: FunctionSpec, d: Dataset, member_budget: int = DEFAULT_BUDGET,
                   grid_step: float | None = None, backend: str = "auto", epsilon=None) -> FitRecord:
    """Least squares over the whole class on all of ``d``.

    Box classes are discretized with ``grid_step`` or, failing that, with the
    step :func:`aol_fit` would use for net radius ``epsilon`` at this ``n``.
    """
    t0 = time.perf_counter()
    use_struct = _structured(spec, backend)
    if isinstance(spec, BoxSequence):
        if grid_step is not None:
            spec = spec.with_grid_step(grid_step)
        elif epsilon is not None:
            spec = resolve_grid_step(spec, epsilon_rule(epsilon, d.n))
    if use_struct and isinstance(spec, BoxSequence):
        pred = structured.box_full_family(spec).erm(d)
    elif use_struct:
        pred = structured.vc_global_erm(spec, d)
    else:
        res = erm_enumerate(member_table(spec, member_budget), d)
        pred = res.predictor
    ms = (time.perf_counter() - t0) * 1e3
    return FitRecord(pred, 1, 0.0, np.array([emp_risk(pred, d)]), ms, "erm")


def sparse_convex_fit(hull: DictionaryHull, d: Dataset, aggregator: AggregatorSpec = AggregatorSpec(),
                      tol: float = 1e-6, member_budget: int = DEFAULT_BUDGET) -> FitRecord:
    """Sparse convex aggregation over the cells of fixed sparsity patterns.

    Stage A fits every pattern with at most ``s`` atoms on S' and aggregates
    the fits on S''.  Stage B fits the whole simplex on S'.  The two results
    are aggregated on S.
    """
    t0 = time.perf_counter()
    count = hull.pattern_count()
    if count > member_budget:
        raise MemberBudgetError(count, member_budget, "sparsity patterns")
    split = split_threeway(d)
    D = hull.dictionary
    fits = [erm_simplex(D, nu, split.s_prime, tol=tol) for nu in hull.patterns()]
    f_tilde = ms_aggregate(aggregator, [r.predictor for r in fits], split.s_dprime)
    full = erm_simplex(D, np.arange(hull.M), split.s_prime, tol=tol)
    pred = ms_aggregate(aggregator, [f_tilde, full.predictor], split.s)
    ms = (time.perf_counter() - t0) * 1e3
    return FitRecord(
        pred, count, 0.0, np.array([r.empirical_risk for r in fits]), ms, "sparse-convex",
        extras={"stage_a": f_tilde, "stage_b": full.predictor,
                "converged": all(r.converged for r in fits) and full.converged},
    )
