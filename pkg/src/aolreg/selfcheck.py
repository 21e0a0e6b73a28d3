"""Fast structural checks and a determinism check, used by ``aolreg selftest``."""

from __future__ import annotations

import time
from typing import NamedTuple

import numpy as np

from . import kernels
from .aggregate import star_aggregate
from .domain import BoxSequence, Dataset, Member, member_table
from .empirical import EmpiricalMetricContext, emp_risk
from .experiments import MINI_FINITE
from .harness import ExperimentConfig, run_experiment
from .netpart import build_partition
from .solvers import erm_simplex
from .worlds import World, exact_risk, sample_world


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def _box_sample(rng, k=4):
    spec = BoxSequence(2.0, k, 0.25, k)
    x = rng.integers(0, k, size=30)
    y = rng.random(30)
    return spec, Dataset(x, y, k)


def check_net_and_partition(seed: int = 0, trials: int = 20) -> Check:
    """Covering, properness and separation of the net; Voronoi partition."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        spec, d = _box_sample(rng)
        T = member_table(spec, 10 ** 6)
        ctx = EmpiricalMetricContext(d)
        eps = float(rng.uniform(0.05, 0.4))
        part = build_partition(T, eps, ctx)
        C = T[part.net.center_ids]
        D = np.sqrt(np.maximum(((T[:, None, :] - C[None, :, :]) ** 2) @ ctx.weights, 0.0))
        if D.min(axis=1).max() > eps + 1e-9:
            return Check("net-partition", False, "a member is farther than epsilon from every center")
        if len(C) > 1:
            cc = D[part.net.center_ids]
            np.fill_diagonal(cc, np.inf)
            if cc.min() <= eps:
                return Check("net-partition", False, "two centers are within epsilon")
        if part.assignment.shape != (T.shape[0],) or part.assignment.min() < 0 or \
                part.assignment.max() >= part.n_cells:
            return Check("net-partition", False, "assignment is not a partition")
        mine = D[np.arange(T.shape[0]), part.assignment]
        worst = max(worst, float((mine - D.min(axis=1)).max()))
        if worst > 1e-9:
            return Check("net-partition", False, "a member is not assigned to a nearest center")
    return Check("net-partition", True, f"{trials} random box classes")


def check_star(seed: int = 1, trials: int = 50) -> Check:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        k = int(rng.integers(1, 6))
        n = int(rng.integers(1, 40))
        d = Dataset(rng.integers(0, k, size=n), rng.random(n), k)
        cands = [Member(rng.random(k)) for _ in range(int(rng.integers(1, 6)))]
        best = min(emp_risk(c, d) for c in cands)
        got = emp_risk(star_aggregate(cands, d), d)
        if got > best + 1e-12:
            return Check("star", False, f"star risk {got} above best candidate {best}")
    return Check("star", True, f"{trials} random candidate sets")


def check_frank_wolfe(seed: int = 2, trials: int = 10) -> Check:
    """Monotone objective, small gap, and agreement with a 0.01 grid on 3-vertex hulls."""
    rng = np.random.default_rng(seed)
    g = np.arange(101) / 100.0
    a, b = np.meshgrid(g, g, indexing="ij")
    keep = a + b <= 1.0 + 1e-12
    W = np.stack([a[keep], b[keep], np.clip(1.0 - a[keep] - b[keep], 0.0, None)], axis=1)
    worst = 0.0
    for _ in range(trials):
        k = 8
        D = rng.random((3, k))
        d = Dataset(rng.integers(0, k, size=60), rng.random(60), k)
        res = erm_simplex(D, [0, 1, 2], d, tol=1e-9)
        if np.any(np.diff(res.trace) > 1e-12):
            return Check("frank-wolfe", False, "objective increased")
        if res.gap > 1e-6:
            return Check("frank-wolfe", False, f"gap {res.gap}")
        grid_best = min(d.stats.risk(v) for v in W @ D)
        diff = grid_best - res.empirical_risk
        worst = max(worst, abs(diff))
        if diff < -1e-9 or diff > 2e-4:
            return Check("frank-wolfe", False, f"grid disagreement {diff}")
    return Check("frank-wolfe", True, f"max grid disagreement {worst:.2e}")


def check_exact_risk(seed: int = 3, samples: int = 100_000, trials: int = 5) -> Check:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        k = int(rng.integers(1, 10))
        mu = rng.dirichlet(np.ones(k))
        eta = rng.random(k)
        w = World(mu, eta, BoxSequence(1.0, k, None, k))
        f = rng.random(k)
        d = sample_world(w, samples, rng)
        loss = (f[d.x] - d.y) ** 2
        se = loss.std(ddof=1) / np.sqrt(samples)
        gap = abs(loss.mean() - exact_risk(w, f))
        if gap > 4 * se:
            return Check("exact-risk", False, f"Monte Carlo gap {gap} exceeds 4 se = {4 * se}")
    return Check("exact-risk", True, f"{trials} worlds, {samples} samples each")


def structural_checks() -> list[Check]:
    return [check_net_and_partition(), check_star(), check_frank_wolfe(), check_exact_risk()]


def determinism_check(cfg: dict | None = None) -> Check:
    """Run the same small experiment twice and compare the CSV bytes."""
    config = ExperimentConfig.from_json(cfg or MINI_FINITE)
    first = run_experiment(config, jobs=1).csv_text().encode()
    second = run_experiment(config, jobs=1).csv_text().encode()
    same = first == second
    return Check("determinism", same, f"{len(first)} bytes, {'identical' if same else 'different'}")


def selftest(out=print) -> bool:
    t0 = time.perf_counter()
    checks = structural_checks()
    t1 = time.perf_counter()
    checks.append(Check("structural-runtime", t1 - t0 < 30.0, f"{t1 - t0:.1f} s"))
    checks.append(determinism_check())
    for c in checks:
        out(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    out(f"kernels: {kernels.BACKEND}; total {time.perf_counter() - t0:.1f} s")
    return all(c.ok for c in checks)
