"""Command line: ``aolreg run | report | bounds | selftest``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bounds
from .harness import ConfigError, ExperimentConfig, load_config, read_rows, run_experiment, summarize, \
    table1_report, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def _model(q: dict) -> bounds.EntropyModel:
    m = q["model"]
    if isinstance(m, dict):
        return bounds.EntropyModel(**m)
    raise ConfigError("model must be an object such as {\"kind\": \"poly\", \"p\": 2}")


def answer_query(q: dict):
    """Evaluate one bound-calculator query such as ``{"op": "psi_nms", "n": 100, "M": 10, "s": 1}``."""
    op = q.get("op")
    if op == "psi_nms":
        return bounds.psi_nms(int(q["n"]), int(q["M"]), int(q["s"]))
    if op == "tilde_psi":
        return bounds.tilde_psi(int(q["m"]), int(q["n"]))
    if op == "barpsi":
        return bounds.barpsi(int(q["n"]), float(q["p"]), float(q["delta2"]))
    if op == "barpsi_breakpoints":
        return list(bounds.barpsi_breakpoints(int(q["n"]), float(q["p"])))
    if op == "loc_radius":
        model = q["rademacher"] if "rademacher" in q else _model(q)
        return bounds.loc_radius(model, int(q["n"]), q.get("C"))
    if op == "dudley_bound":
        model = _model(q)
        alpha = q.get("alpha")
        if alpha is None:
            alpha = bounds.dudley_alpha(model, int(q["n"]))
        return bounds.dudley_bound(model, int(q["n"]), float(alpha))
    if op == "xi_bound":
        inputs = bounds.BoundInputs(int(q["n"]), float(q["epsilon"]), float(q["delta"]),
                                    float(q.get("C", 1.0)), q.get("r_star"))
        return bounds.xi_bound(_model(q), inputs)
    if op == "rate_exponent":
        return bounds.rate_exponent(q["setting"], q.get("p"))
    if op == "table1_targets":
        return bounds.table1_targets(q["regime"], q.get("p"))
    raise ConfigError(f"unknown bounds op {op!r}")


def _read_query(text: str):
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"query is not valid JSON: {exc}") from exc


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        obj["base_seed"] = args.seed
        cfg = ExperimentConfig.from_json(obj)
    out = args.out or cfg.out or "results"
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    report = run_experiment(cfg, jobs=jobs)
    write_outputs(report, out, plot=cfg.plot)
    print(f"{len(report.rows)} rows written to {out}/rows.csv")
    for label, e in sorted(report.summary["estimators"].items()):
        slope = "n/a" if e["slope"] is None else f"{e['slope']:+.3f} ± {e['stderr']:.3f}"
        print(f"  {label}: slope {slope} (target {e['target']})")
    if report.errors:
        print(f"{len(report.errors)} fits failed; see {out}/errors.csv", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.inp)
    summaries = {}
    dirs = [src] if (src / "rows.csv").exists() or (src / "summary.json").exists() else sorted(
        p for p in src.iterdir() if p.is_dir())
    for d in dirs:
        if (d / "summary.json").exists():
            summ = json.loads((d / "summary.json").read_text(encoding="utf-8"))
        elif (d / "rows.csv").exists():
            summ = summarize(read_rows(d / "rows.csv"))
        else:
            continue
        name = summ.get("regime") or d.name
        if name == "poly" and summ.get("p") is not None:
            name = f"poly:{summ['p']}"
        summaries[name] = summ
    table = table1_report(summaries)
    if args.json:
        print(json.dumps(table["rows"], indent=2))
    else:
        print(table["text"])
    return EXIT_OK


def cmd_bounds(args) -> int:
    q = _read_query(args.query)
    result = [answer_query(x) for x in q] if isinstance(q, list) else answer_query(q)
    print(json.dumps(result))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selfcheck import selftest

    return EXIT_OK if selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aolreg", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int)
    r.add_argument("--seed", type=int)
    r.set_defaults(fn=cmd_run)
    rep = sub.add_parser("report", help="rate table from one or more result directories")
    rep.add_argument("--in", dest="inp", required=True)
    rep.add_argument("--json", action="store_true")
    rep.set_defaults(fn=cmd_report)
    b = sub.add_parser("bounds", help="evaluate a bound calculator")
    b.add_argument("--query", required=True, help="JSON object (or list of objects), inline or as a file path")
    b.set_defaults(fn=cmd_bounds)
    s = sub.add_parser("selftest", help="structural checks and a determinism check")
    s.set_defaults(fn=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
