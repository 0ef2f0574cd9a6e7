import json

import pytest

from tbaudit import audit
from tbaudit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_audit_writes_report_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run(capsys, "audit", "--metric", "sphere", "--samples", "3", "--seed", "42", "--out", str(out))
    assert code == 0 and stdout == ""
    doc = json.loads(out.read_text())
    assert doc["config"]["seed"] == 42
    assert "eq16.hv" in doc["falsified_claims"]


def test_unknown_metric_and_flag_exit_two(capsys):
    code, _, err = run(capsys, "audit", "--metric", "nosuch")
    assert code == 2 and "unknown metric" in err
    code, _, err = run(capsys, "audit", "--frobnicate")
    assert code == 2 and "usage" in err
    code, _, _ = run(capsys)
    assert code == 2


def test_bad_values_exit_two(capsys):
    assert run(capsys, "audit", "--metric", "euclidean", "--samples", "0")[0] == 2
    assert run(capsys, "audit", "--metric", "euclidean", "--tol-pass", "1", "--tol-fail", "0.1")[0] == 2
    assert run(capsys, "killing", "--metric", "euclidean")[0] == 2  # --field is required


def test_unexpected_failure_exits_one(monkeypatch, capsys):
    monkeypatch.setattr(audit, "load_expected", lambda: {"claims": {}, "propositions": {}})
    code, _, err = run(capsys, "connection", "--metric", "euclidean", "--samples", "2")
    assert code == 1 and "eq2.vertical_vertical" in err


def test_subcommands_restrict_groups(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "euclidean", "--dim", "2", "--samples", "2")
    ids = [c["id"] for c in json.loads(out)["claims"]]
    assert code == 0 and all(i.startswith(("eq17", "eq18")) for i in ids)
    code, out, _ = run(capsys, "killing", "--metric", "sphere", "--field", "killing", "--samples", "2")
    doc = json.loads(out)
    assert code == 0 and doc["config"]["fields"] == ["killing"]
    assert {c["id"][:4] for c in doc["claims"]} == {"eq15", "eq16"}


def test_config_file_then_flags_then_env(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "euclidean", "params": [1], "samples": 2, "seed": 5}))
    code, out, _ = run(capsys, "lifts", "--config", str(cfg), "--samples", "3")
    doc = json.loads(out)
    assert code == 0 and doc["config"]["samples"] == 3 and doc["config"]["seed"] == 5
    monkeypatch.setenv("TBAUDIT_SEED", "99")
    _, out, _ = run(capsys, "lifts", "--metric", "euclidean", "--samples", "1")
    assert json.loads(out)["config"]["seed"] == 99
    _, out, _ = run(capsys, "lifts", "--metric", "euclidean", "--samples", "1", "--seed", "4")
    assert json.loads(out)["config"]["seed"] == 4
    monkeypatch.setenv("TBAUDIT_SEED", "abc")
    assert run(capsys, "lifts", "--metric", "euclidean", "--samples", "1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "audit", "--config", str(bad))[0] == 2


def test_table_format(capsys):
    code, out, _ = run(capsys, "connection", "--metric", "euclidean", "--samples", "2", "--format", "table")
    assert code == 0 and "eq2.vertical_vertical" in out and "claims:" in out


def test_geodesic_straight_line_csv(capsys):
    code, out, _ = run(capsys, "geodesic", "--metric", "euclidean", "--dim", "1", "--x", "0.5", "--y", "-1",
                       "--v", "1", "2", "--steps", "10", "--dt", "0.1")
    rows = [list(map(float, r.split(","))) for r in out.strip().splitlines()[1:]]
    assert code == 0 and len(rows) == 11
    for t, x, y, *_ in rows:
        assert abs(x - (0.5 + t)) < 1e-12 and abs(y - (-1 + 2 * t)) < 1e-12


def test_geodesic_errors(tmp_path, capsys):
    base = ["geodesic", "--metric", "hyperbolic_half_plane", "--steps", "200", "--dt", "0.05"]
    assert run(capsys, *base, "--x", "0", "--y", "0", "0", "--v", "0", "0", "0", "0")[0] == 2
    assert run(capsys, *base, "--x", "0", "-1", "--y", "0", "0", "--v", "0", "0", "0", "0")[0] == 2
    out = tmp_path / "g.csv"
    code, _, err = run(capsys, *base, "--x", "0", "0.05", "--y", "0", "0", "--v", "0", "-1", "0", "0",
                       "--out", str(out))
    assert code == 1 and "left the chart" in err
    assert out.read_text().startswith("t,x1,x2,y1,y2,")


@pytest.mark.parametrize("argv", [["--version"], ["audit", "--help"]])
def test_informational_flags_exit_zero(argv, capsys):
    assert main(argv) == 0
