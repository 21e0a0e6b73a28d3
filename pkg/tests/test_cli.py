import json
import subprocess
import sys

import pytest

from aolreg.cli import answer_query, main


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


CFG = {
    "world": {"kind": "finite", "M": 4, "k": 5},
    "estimators": [{"kind": "aol"}, {"kind": "erm"}],
    "n_grid": [30, 60, 120],
    "replications": 2,
    "regime": "finite",
}


def test_run_and_report(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["run", "--config", _write(tmp_path, CFG), "--out", str(out), "--seed", "3"]) == 0
    assert (out / "rows.csv").exists() and (out / "summary.json").exists()
    capsys.readouterr()
    assert main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("regime") and "finite" in text


def test_report_empty_dir(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == ""


def test_partial_failure_exit_code(tmp_path):
    cfg = dict(CFG, estimators=[{"kind": "aol"}, {"kind": "sparse-convex"}])
    out = tmp_path / "res"
    assert main(["run", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 3
    assert (out / "errors.csv").exists()


def test_config_error_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["run", "--config", _write(tmp_path, dict(CFG, n_grid=[5, 1]))]) == 2


def test_bounds_queries(capsys):
    assert main(["bounds", "--query", '{"op": "psi_nms", "n": 100, "M": 10, "s": 1}']) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.0330259, abs=1e-6)
    assert main(["bounds", "--query", '[{"op": "barpsi_breakpoints", "n": 4096, "p": 4}]']) == 0
    assert json.loads(capsys.readouterr().out) == [[0.0625, 0.125]]
    assert main(["bounds", "--query", '{"op": "nope"}']) == 2
    assert main(["bounds", "--query", "not json"]) == 2


@pytest.mark.parametrize("q,expected", [
    ({"op": "tilde_psi", "m": 1, "n": 100}, 0.01),
    ({"op": "barpsi", "n": 4096, "p": 4, "delta2": 0.09}, 0.09),
    ({"op": "dudley_bound", "model": {"kind": "poly", "p": 1}, "n": 100, "alpha": 0.0}, 2.4),
    ({"op": "rate_exponent", "setting": "regret-poly", "p": 4}, -0.25),
])
def test_answer_query(q, expected):
    assert answer_query(q) == pytest.approx(expected)


def test_answer_query_extra_ops():
    assert answer_query({"op": "loc_radius", "rademacher": 0.0, "n": 10}) == 0.0
    assert answer_query({"op": "table1_targets", "regime": "finite"})["erm"] == -0.5
    x = answer_query({"op": "xi_bound", "model": {"kind": "finite", "M": 4}, "n": 100, "epsilon": 0.1,
                      "delta": 0.1})
    assert x > 0
    assert answer_query({"op": "dudley_bound", "model": {"kind": "poly", "p": 3}, "n": 1000}) > 0


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "aolreg", "bounds", "--query",
                          '{"op": "tilde_psi", "m": 1, "n": 100}'], capture_output=True, text=True)
    assert out.returncode == 0 and float(out.stdout) == pytest.approx(0.01)


def test_selftest_command(capsys):
    assert main(["selftest"]) == 0
    assert "PASS determinism" in capsys.readouterr().out
