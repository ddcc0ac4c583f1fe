import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from phasegap.cli import fmt_value, main, parse_csv, render

ROOT = Path(__file__).resolve().parents[1]
TOY = ROOT / "configs" / "toy.json"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(out):
    return parse_csv(out)[1]


def test_qpe_simulate_example(capsys):
    code, out, _ = run(["qpe", "simulate", "--eta", "3", "--t", "2"], capsys)
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["beta0"]) == pytest.approx(0.6533, abs=1e-4)
    assert float(row["bound"]) == 0.5 and row["holds"] == "true"


def test_marker_bounds_table(capsys):
    code, out, _ = run(["marker", "bounds", "--w", "2..8"], capsys)
    rows = rows_of(out)
    assert code == 0 and [int(r["w"]) for r in rows] == list(range(2, 9))
    assert all(float(r["lower"]) <= float(r["lambda_min"]) <= float(r["upper"]) for r in rows)


def test_sweep_alternates(capsys):
    code, out, _ = run(["phase-diagram", "sweep", "--config", str(TOY)], capsys)
    assert code == 0
    verdicts = {}
    for r in rows_of(out):
        if r["verdict"] != "OutsideCertifiedInterval":
            verdicts.setdefault(int(r["eta"]), set()).add(r["verdict"])
    assert verdicts == {eta: {"Gapless" if eta % 2 == 0 else "Gapped"} for eta in range(1, 9)}


def test_sweep_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["phase-diagram", "sweep", "--config", str(TOY), "--out", str(a)]) == 0
    assert main(["phase-diagram", "sweep", "--config", str(TOY), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_and_csv_agree(tmp_path):
    c, j = tmp_path / "s.csv", tmp_path / "s.json"
    main(["phase-diagram", "sweep", "--config", str(TOY), "--out", str(c)])
    main(["phase-diagram", "sweep", "--config", str(TOY), "--out", str(j), "--format", "json"])
    header, crows = parse_csv(c.read_text())
    doc = json.loads(j.read_text())
    assert doc["schema"] == "phasegap/1" and doc["columns"] == header
    for cr, jr in zip(crows, doc["rows"], strict=True):
        for k in header:
            v = jr[k]
            if v is None:
                assert cr[k] == ""
            elif isinstance(v, float):
                assert float(cr[k]) == v
            else:
                assert cr[k] == str(v)


def test_empty_result_header_only():
    assert render(("a_log2", "b"), [], "csv") == "a_log2,b\n"


def test_twelve_significant_digits():
    assert fmt_value(1 / 3) == 0.333333333333
    assert fmt_value(float("inf")) == "inf"
    assert render(("x",), [{"x": 2 / 3}], "csv") == "x\n0.666666666667\n"


def test_log2_columns_labelled(capsys):
    _, out, _ = run(["marker", "segment", "--L", "4"], capsys)
    header = out.splitlines()[0].split(",")
    assert {"energy_log2", "edge_lower_log2", "edge_upper_log2"} <= set(header)


@pytest.mark.parametrize("argv,kind", [
    (["bogus"], "usage"),
    (["qpe", "simulate", "--eta", "0", "--t", "2"], "validation"),
    (["qpe", "simulate", "--eta", "3", "--t", "13"], "resource"),
    (["history", "guard", "--alpha", "2"], "validation"),
    (["balance", "classify", "--phi", "1.5"], "validation"),
])
def test_errors_are_json(argv, kind, capsys):
    code, out, err = run(argv, capsys)
    assert code != 0 and out == ""
    assert json.loads(err)["error"] == kind


def test_no_partial_file_on_error(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code, _, _ = run(["qpe", "simulate", "--eta", "3", "--t", "13", "--out", str(out)], capsys)
    assert code != 0 and not out.exists()
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("cfg", [
    {"schema": "phasegap-config/1", "colour": 1},
    {"schema": "other"},
    {"schema": "phasegap-config/1", "balance": {"xii": 5}},
    {"schema": "phasegap-config/1", "sweep": {"eta": [1, 2], "step": 3}},
    {"schema": "phasegap-config/1", "sweep": {"eta": [3, 1]}},
])
def test_bad_config_rejected(cfg, tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, out, err = run(["phase-diagram", "sweep", "--config", str(p)], capsys)
    assert code == 2 and out == "" and json.loads(err)["error"] == "validation"


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    code, _, err = run(["phase-diagram", "sweep", "--config", str(p)], capsys)
    assert code == 2 and "malformed" in json.loads(err)["message"]


def test_budget_flag_and_env(capsys, monkeypatch):
    code, _, err = run(["tiles", "enumerate", "--L", "4", "--budget", "5"], capsys)
    assert code == 3 and json.loads(err)["error"] == "budget"
    monkeypatch.setenv("PHASEGAP_BUDGET", "5")
    code, _, err = run(["history", "diag", "--T", "8"], capsys)
    assert code == 3 and json.loads(err)["error"] == "resource"
    code, _, _ = run(["history", "diag", "--T", "8", "--budget", "100"], capsys)
    assert code == 0


def test_history_diag_rows(capsys):
    _, out, _ = run(["history", "diag", "--T", "4", "--t-init", "1"], capsys)
    (row,) = rows_of(out)
    assert float(row["lambda_min"]) <= float(row["upper_bound"]) == pytest.approx(0.09903, abs=1e-5)


def test_history_diag_circuit_frustration_free(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n": 2, "gates": [{"name": "H", "targets": [0]},
                                               {"name": "X", "targets": [1], "controls": [0]}]}))
    _, out, _ = run(["history", "diag", "--circuit", str(p)], capsys)
    assert abs(float(rows_of(out)[0]["lambda_min"])) < 1e-11


def test_guard_grid(capsys):
    _, out, _ = run(["history", "guard"], capsys)
    rows = rows_of(out)
    assert len(rows) == 25 and max(float(r["abs_error"]) for r in rows) < 1e-10


def test_qpe_sk(capsys):
    _, out, _ = run(["qpe", "sk", "--theta", "0.3,0.7853981633974483", "--epsilon", "1e-2"], capsys)
    rows = rows_of(out)
    assert all(float(r["achieved_error"]) <= 1e-2 for r in rows) and rows[1]["word"] == "T"


def test_tiles_commands(capsys):
    code, out, _ = run(["tiles", "enumerate", "--L", "4"], capsys)
    rows = rows_of(out)
    assert code == 0 and rows and all(r["score"] == "0" for r in rows)
    code, out, _ = run(["tiles", "audit", "--s", "4", "--width", "9"], capsys)
    assert code == 0 and any(r["kind"] == "intact" for r in rows_of(out))


def test_balance_window_json_meta(capsys):
    _, out, _ = run(["balance", "window", "--L-hi", "1024", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["meta"]["satisfied_range"] is None and all(r["too_strong"] for r in doc["rows"])


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "phasegap.cli", "qpe", "simulate", "--eta", "2", "--t", "2"],
                       capture_output=True, text=True, env={**os.environ})
    assert r.returncode == 0 and r.stdout.startswith("eta,")
