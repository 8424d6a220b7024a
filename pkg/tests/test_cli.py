from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from lagsurgery import cli
from lagsurgery.errors import ModelViolation, ParameterError
from lagsurgery.report import CheckRecord, Report, RunConfig


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def load(path):
    return json.loads(path.read_text())


# -- handle ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def handle_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("handle")
    out, svg = d / "report.json", d / "slice.svg"
    code = cli.main(["handle", "--n", "3", "--k", "1", "--epsilon", "0.1", "--delta", "0.1",
                     "--out", str(out), "--emit-slice", str(svg)])
    return code, out, svg


def test_handle_example(handle_run):
    code, out, _ = handle_run
    assert code == 0
    rep = load(out)
    assert rep["passed"] is True
    tear = [c for c in rep["checks"] if c["name"] == "teardrop_area"][0]
    assert tear["measured"] == pytest.approx(2 * 0.1**1.5, rel=1e-6)
    assert tear["provenance"] == "paper"
    assert all(c["provenance"] in ("paper", "trivial", "derived") for c in rep["checks"])


def test_handle_svg(handle_run):
    _, _, svg = handle_run
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 2


def test_handle_csv(tmp_path, capsys):
    path = tmp_path / "slice.csv"
    code, _, _ = run(["handle", "--n", "2", "--k", "0", "--no-locus", "--emit-slice", str(path)], capsys)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "curve,index,x,y" and len(lines) > 100


def test_handle_bad_epsilon(capsys):
    code, _, err = run(["handle", "--n", "2", "--k", "0", "--epsilon", "-1"], capsys)
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["error"] == "ParameterError" and "epsilon" in rec["message"]


# -- maslov -----------------------------------------------------------------------------------


def test_maslov_single(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, text, _ = run(["maslov", "--n", "5", "--k", "2", "--resolution", "plus", "--out", str(out)], capsys)
    assert code == 0
    rows = load(out)["results"]["table"]
    assert rows == [{"n": 5, "k": 2, "resolution": "Phi+", "mu": 2, "expected": 2}]
    assert "mu=2" in text


def test_maslov_small_table(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, _, _ = run(["maslov", "--n-max", "3", "--out", str(out)], capsys)
    assert code == 0
    assert len(load(out)["results"]["table"]) == 2 * (1 + 2)


def test_maslov_excluded_index(capsys):
    code, _, _ = run(["maslov", "--n", "4", "--k", "3"], capsys)
    assert code == 2


# -- cpn ------------------------------------------------------------------------------------------


def test_cpn_examples(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["cpn", "--n", "5", "--k", "2", "--out", str(out)], capsys)[0] == 0
    b = load(out)["results"]["budget"]
    assert b["r_monotone"] == "2/3" and b["required_omega_sigma"]["pi_multiple"] == "1/3" and b["feasible"]
    assert run(["cpn", "--n", "7", "--k", "4", "--out", str(out)], capsys)[0] == 0
    assert load(out)["results"]["budget"]["required_omega_sigma"]["pi_multiple"] == "1/4"


def test_cpn_hypothesis(capsys):
    code, _, err = run(["cpn", "--n", "4", "--k", "2"], capsys)
    assert code == 2 and "2 <= k <= n-3" in err


# -- surgery -----------------------------------------------------------------------------------------


def test_surgery_composite(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, text, _ = run(["surgery", "--start", "S1xS4", "--k", "2", "--resolve", "P", "--out", str(out)], capsys)
    assert code == 0
    assert "(S3xS2) # 2P5" in text
    stages = load(out)["results"]["stages"]
    assert stages[-1]["expression"] == "(S3xS2) # 2P5"
    assert [s["chi"] for s in stages] == [0, 0, 0]


def test_surgery_trace(capsys):
    code, text, _ = run(["surgery", "--start", "T2", "--k", "1"], capsys)
    assert code == 0 and "2-handle + 1-handle" in text


def test_surgery_q_flag(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(["surgery", "--start", "S2", "--k", "0", "--resolve", "Q", "--out", str(out)], capsys)
    assert code == 0
    assert load(out)["results"]["stages"][-1]["orientable"] is False


def test_surgery_unrepresentable(capsys):
    code, _, err = run(["surgery", "--start", "S3", "--k", "2", "--resolve", "P"], capsys)
    assert code == 2 and "NotRepresentable" in err


# -- tori and desing -------------------------------------------------------------------------------------


def test_tori(tmp_path, capsys):
    out = tmp_path / "t.json"
    code, _, _ = run(["tori", "--out", str(out), "--A", "1.0", "--target", "chekanov", "--A-target", "1.5"], capsys)
    rep = load(out)
    assert code == 0 and rep["passed"]
    assert rep["results"]["plan"]["feasible"] is False
    assert len(rep["results"]["cobordisms"]) == 3


def test_desing(tmp_path, capsys):
    out = tmp_path / "d.json"
    svg = tmp_path / "d.svg"
    code, _, _ = run(["desing", "--out", str(out), "--emit-slice", str(svg)], capsys)
    assert code == 0
    assert load(out)["passed"] and svg.read_text().count("<polyline") >= 1


# -- reports and configuration -----------------------------------------------------------------------------


def test_byte_stable_reports(tmp_path, capsys):
    # The config echo records the output path, so both runs write to the same file.
    path = tmp_path / "a.json"
    blobs = []
    for _ in range(2):
        assert run(["tori", "--seed", "7", "--out", str(path)], capsys)[0] == 0
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]
    assert load(path)["timestamp"] is None and load(path)["seed"] == 7


def test_timestamp_opt_in(tmp_path, capsys):
    out = tmp_path / "a.json"
    run(["cpn", "--timestamp", "--out", str(out)], capsys)
    assert load(out)["timestamp"] is not None


def test_report_roundtrip(tmp_path, capsys):
    out = tmp_path / "a.json"
    run(["surgery", "--start", "S1xS4", "--k", "2", "--resolve", "P", "--out", str(out)], capsys)
    text = out.read_text()
    assert Report.from_json(text).to_json() == text
    again = Report.from_json(Report.from_json(text).to_json())
    assert again.to_dict() == json.loads(text)


def test_report_rejects_inconsistent_flag():
    rep = Report("cpn", {})
    rep.add("x", False, 1, 0, "paper")
    data = rep.to_dict()
    data["passed"] = True
    with pytest.raises(ParameterError):
        Report.from_dict(data)
    with pytest.raises(ParameterError):
        CheckRecord("x", True, 1, 1, "folklore")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema_version": 1, "cpn": {"n": 7, "k": 4}}))
    out = tmp_path / "a.json"
    assert run(["cpn", "--config", str(cfg), "--out", str(out)], capsys)[0] == 0
    assert load(out)["results"]["budget"]["n"] == 7
    assert run(["cpn", "--config", str(cfg), "--k", "2", "--out", str(out)], capsys)[0] == 0
    b = load(out)["results"]["budget"]
    assert (b["n"], b["k"]) == (7, 2)


def test_config_rejections(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 5, "k": 2, "colour": "red"}))
    code, _, err = run(["cpn", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err
    assert run(["handle", "--grid", "3"], capsys)[0] == 2
    assert run(["handle", "--tol", "0"], capsys)[0] == 2
    assert run(["cpn", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2
    cfg.write_text("{not json")
    assert run(["cpn", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text(json.dumps({"schema_version": 99}))
    assert run(["cpn", "--config", str(cfg)], capsys)[0] == 2


def test_run_config_types():
    assert RunConfig("cpn", {"n": 5, "k": 2}).get("n") == 5
    assert RunConfig("tori", {"scale": 2}).get("scale") == 2.0
    with pytest.raises(ParameterError):
        RunConfig("cpn", {"n": "five"})
    with pytest.raises(ParameterError):
        RunConfig("nonsense", {})


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["handle", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_failed_check_exit_code(monkeypatch, capsys):
    def failing(cfg):
        rep = Report("cpn", cfg.to_dict())
        rep.add("always fails", False, 1, 0, "trivial")
        return rep

    monkeypatch.setitem(cli.COMMANDS, "cpn", failing)
    code, text, _ = run(["cpn"], capsys)
    assert code == 1 and "[FAIL]" in text


def test_model_violation_exit_code(monkeypatch, capsys):
    def violating(cfg):
        raise ModelViolation("double point off the locus")

    monkeypatch.setitem(cli.COMMANDS, "cpn", violating)
    code, _, err = run(["cpn"], capsys)
    assert code == 1 and "ModelViolation" in err


@pytest.mark.skipif(shutil.which("lagsurgery") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["lagsurgery", "cpn", "--n", "5", "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and "cpn: PASS" in proc.stdout


def test_module_entry():
    proc = subprocess.run([sys.executable, "-m", "lagsurgery.cli", "cpn", "--n", "4", "--k", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
