"""Replicated experiments: seeding, fitting, exact excess risk, slopes and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregate import AggregatorSpec
from .bounds import table1_targets
from .domain import DictionaryHull
from .estimators import AolConfig, aol_fit, global_erm_fit, skeleton_fit, sparse_convex_fit
from .worlds import excess_risk, sample_world, world_from_json

log = logging.getLogger(__name__)

COLUMNS = ("world_id", "estimator", "n", "rep", "seed", "epsilon", "n_cells", "excess_risk", "fit_wall_ms")
ESTIMATORS = ("aol", "skeleton", "erm", "sparse-convex")
THREE_STAGE = ("aol", "skeleton", "sparse-convex")
EXCESS_FLOOR = -1e-9


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    label: str
    options: dict = field(default_factory=dict)
    world: dict | None = None
    target: float | None = None

    @classmethod
    def from_json(cls, obj) -> "EstimatorSpec":
        if isinstance(obj, str):
            obj = {"kind": obj}
        obj = dict(obj)
        kind = obj.pop("kind", None)
        if kind not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {kind!r}; expected one of {ESTIMATORS}")
        label = obj.pop("label", kind)
        world = obj.pop("world", None)
        target = obj.pop("target", None)
        return cls(kind, label, obj, world, None if target is None else float(target))


@dataclass(frozen=True)
class ExperimentConfig:
    world: dict
    estimators: tuple
    n_grid: tuple
    replications: int = 1
    base_seed: int = 0
    out: str | None = None
    jobs: int = 1
    regime: str | None = None
    p: float | None = None
    record_timing: bool = True
    plot: bool = False

    def __post_init__(self):
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        if list(self.n_grid) != sorted(self.n_grid) or any(int(n) < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be positive and sorted ascending")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        labels = [e.label for e in self.estimators]
        if len(set(labels)) != len(labels):
            raise ConfigError("estimator labels must be unique")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        try:
            return cls(
                world=dict(obj["world"]),
                estimators=tuple(EstimatorSpec.from_json(e) for e in obj["estimators"]),
                n_grid=tuple(int(n) for n in obj["n_grid"]),
                replications=int(obj.get("replications", 1)),
                base_seed=int(obj.get("base_seed", 0)),
                out=obj.get("out"),
                jobs=int(obj.get("jobs", 1)),
                regime=obj.get("regime"),
                p=obj.get("p"),
                record_timing=bool(obj.get("record_timing", True)),
                plot=bool(obj.get("plot", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad config: {exc!r}") from exc

    def target(self, est: EstimatorSpec) -> float | None:
        if est.target is not None:
            return est.target
        if self.regime is None:
            return None
        key = {"aol": "aol", "skeleton": "skeleton", "erm": "erm"}.get(est.kind)
        if key is None:
            return None
        return table1_targets(self.regime, self.p)[key]


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_json(obj)


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------


def _seed(*words) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint64)[0])


def world_seed(base_seed: int, n: int, rep: int) -> int:
    return _seed(base_seed, n, rep)


def data_seed(base_seed: int, n: int, rep: int, label: str) -> int:
    """Independent of scheduling and of which other estimators are configured."""
    return _seed(base_seed, n, rep, zlib.crc32(label.encode()))


# ---------------------------------------------------------------------------
# one replication
# ---------------------------------------------------------------------------


def _aggregator(opts: dict) -> AggregatorSpec:
    agg = opts.get("aggregator", "star")
    if isinstance(agg, dict):
        return AggregatorSpec(agg.get("kind", "star"), float(agg.get("beta", 4.0)))
    return AggregatorSpec(agg, float(opts.get("beta", 4.0)))


def _fit(est: EstimatorSpec, world, data, n: int):
    opts = est.options
    spec = world.reference
    budget = int(opts.get("member_budget", 200_000))
    backend = opts.get("backend", "auto")
    grid_step = opts.get("grid_step")
    if est.kind == "aol":
        cfg = AolConfig(opts.get("epsilon", "vc"), _aggregator(opts), budget, grid_step, backend)
        return aol_fit(spec, data, cfg)
    if est.kind == "skeleton":
        return skeleton_fit(spec, data, opts.get("epsilon", "vc"), _aggregator(opts), budget, grid_step, backend)
    if est.kind == "erm":
        return global_erm_fit(spec, data, budget, grid_step, backend, opts.get("epsilon"))
    if not isinstance(spec, DictionaryHull):
        raise ConfigError("sparse-convex needs a dictionary world")
    return sparse_convex_fit(spec, data, _aggregator(opts), float(opts.get("tol", 1e-6)), budget)


def _build_world(obj: dict, n: int, seed: int):
    return world_from_json(obj, n=n, rng=np.random.default_rng(seed))


def run_cell(cfg: ExperimentConfig, n: int, rep: int) -> tuple[list, list]:
    """All estimators for one ``(n, rep)``; returns ``(rows, errors)``."""
    rows, errors = [], []
    wseed = world_seed(cfg.base_seed, n, rep)
    shared = None
    for est in cfg.estimators:
        seed = data_seed(cfg.base_seed, n, rep, est.label)
        try:
            if est.world is not None:
                world = _build_world(est.world, n, wseed)
            else:
                if shared is None:
                    shared = _build_world(cfg.world, n, wseed)
                world = shared
            size = 3 * n if est.kind in THREE_STAGE else n
            data = sample_world(world, size, np.random.default_rng(seed))
            rec = _fit(est, world, data, n)
            exc = excess_risk(world, rec.predictor)
            if exc < EXCESS_FLOOR:
                raise RuntimeError(f"negative excess risk {exc}: class oracle failure")
            rows.append((world.world_id, est.label, n, rep, seed, float(rec.epsilon), int(rec.n_cells),
                         float(exc), float(rec.wall_ms) if cfg.record_timing else 0.0))
        except Exception as exc:  # recorded per row; the run continues
            errors.append((est.label, n, rep, seed, f"{type(exc).__name__}: {exc}"))
    return rows, errors


def _cell_task(args):
    return run_cell(*args)


@dataclass
class RiskReport:
    rows: list
    errors: list
    summary: dict

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r[0], r[1], r[2], r[3], r[4], repr(r[5]), r[6], repr(r[7]), repr(r[8])])
        return buf.getvalue()

    def excess(self, label: str, n: int) -> np.ndarray:
        return np.array([r[7] for r in self.rows if r[1] == label and r[2] == n])


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> RiskReport:
    jobs = cfg.jobs if jobs is None else jobs
    tasks = [(cfg, n, rep) for n in cfg.n_grid for rep in range(cfg.replications)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_cell_task(t) for t in tasks]
    rows = sorted(r for rs, _ in results for r in rs)
    errors = sorted(e for _, es in results for e in es)
    return RiskReport(rows, errors, summarize(rows, cfg))


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def fit_slope(points) -> tuple[float, float]:
    """OLS slope of ``log(mean)`` on ``log(n)`` and its standard error."""
    pts = []
    for n, m in points:
        if m > 0 and n > 0:
            pts.append((math.log(n), math.log(m)))
        else:
            log.warning("dropping point n=%s with non-positive mean %s", n, m)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points with positive means, have {len(pts)}")
    x, y = np.array(pts).T
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    sxx = float(((x - x.mean()) ** 2).sum())
    return float(coef[1]), math.sqrt(s2 / sxx)


def summarize(rows, cfg: ExperimentConfig | None = None) -> dict:
    by = {}
    for r in rows:
        by.setdefault(r[1], {}).setdefault(r[2], []).append(r[7])
    out = {}
    for label, per_n in by.items():
        ns = sorted(per_n)
        means = [float(np.mean(per_n[n])) for n in ns]
        entry = {
            "n": ns,
            "mean": means,
            "median": [float(np.median(per_n[n])) for n in ns],
            "reps": [len(per_n[n]) for n in ns],
            "slope": None,
            "stderr": None,
            "target": None,
        }
        try:
            entry["slope"], entry["stderr"] = fit_slope(list(zip(ns, means)))
        except ValueError:
            pass
        if cfg is not None:
            for est in cfg.estimators:
                if est.label == label:
                    entry["target"] = cfg.target(est)
                    entry["kind"] = est.kind
        out[label] = entry
    return {"regime": cfg.regime if cfg else None, "p": cfg.p if cfg else None, "estimators": out}


def write_outputs(report: RiskReport, out_dir, plot: bool = False) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rows.csv").write_text(report.csv_text(), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(report.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if report.errors:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("estimator", "n", "rep", "seed", "error"))
        w.writerows(report.errors)
        (out / "errors.csv").write_text(buf.getvalue(), encoding="utf-8")
    if plot:
        plot_rates(report.summary, out / "rates.svg")
    return out


def read_rows(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            rows.append((r["world_id"], r["estimator"], int(r["n"]), int(r["rep"]), int(r["seed"]),
                         float(r["epsilon"]), int(r["n_cells"]), float(r["excess_risk"]), float(r["fit_wall_ms"])))
    return rows


def plot_rates(summary: dict, path) -> bool:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib is not installed; skipping %s", path)
        return False
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, e in sorted(summary["estimators"].items()):
        ns, means = np.array(e["n"], float), np.array(e["mean"], float)
        keep = means > 0
        pts = ax.loglog(ns[keep], means[keep], "o", label=label)
        if e["slope"] is not None:
            x = np.log(ns[keep])
            b = np.mean(np.log(means[keep]) - e["slope"] * x)
            ax.loglog(ns[keep], np.exp(b + e["slope"] * x), "-", color=pts[0].get_color())
    ax.set_xlabel("n")
    ax.set_ylabel("mean excess risk")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return True


# ---------------------------------------------------------------------------
# rate table
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("aol", "skeleton", "erm")
MISSING = "n/a"


def _fmt(x) -> str:
    return MISSING if x is None else f"{x:+.3f}"


def table1_report(summaries) -> dict:
    """Measured slopes beside predicted exponents, one row per regime.

    ``summaries`` maps a regime name (``"finite"``, ``"poly:1.5"``...) to a
    summary dict as written to ``summary.json``.
    """
    rows = []
    for name, summ in summaries.items():
        regime, p = name, None
        if name.startswith("poly:"):
            regime, p = "poly", float(name[5:])
        try:
            targets = table1_targets(regime, p)
        except ValueError:
            targets = {}
        measured = {}
        for e in summ.get("estimators", {}).values():
            kind = e.get("kind")
            if kind in TABLE_COLUMNS and e.get("slope") is not None:
                measured[kind] = (e["slope"], e["stderr"])
        cells = {}
        for col in TABLE_COLUMNS:
            m = measured.get(col)
            cells[col] = {"slope": m[0] if m else None, "stderr": m[1] if m else None, "target": targets.get(col)}
        rows.append({"regime": name, "cells": cells})
    lines = []
    if rows:
        head = ["regime"] + [f"{c} (measured / target)" for c in TABLE_COLUMNS]
        lines.append(" | ".join(head))
        for r in rows:
            parts = [r["regime"]]
            for c in TABLE_COLUMNS:
                cell = r["cells"][c]
                parts.append(f"{_fmt(cell['slope'])} / {_fmt(cell['target'])}")
            lines.append(" | ".join(parts))
    return {"rows": rows, "text": "\n".join(lines)}
