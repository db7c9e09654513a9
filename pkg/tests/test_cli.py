import csv
import io
import json

import pytest

from ducktrap.cli import SWEEP_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_csv(capsys):
    code, out, err = run(capsys, "simulate", "--lambda", "0", "--start=-0.1,0.05", "--t-max", "200")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "x", "y", "regime"]
    assert rows[1] == ["0.0", "-0.1", "0.05", "int"]
    assert "ExitC0" in err


def test_simulate_json_file(tmp_path, capsys):
    path = tmp_path / "traj.json"
    code, _, _ = run(capsys, "simulate", "--system", "fold", "--h", "sine", "--eps", "1e-3",
                     "--start=0.05,0.05", "--json", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["schema"] == 1
    assert doc["events"][-1]["kind"] == "ExitV"
    assert doc["meta"]["family"] == "fold"


def test_config_file_and_override(tmp_path, capsys):
    ini = tmp_path / "s.ini"
    ini.write_text("[params]\neps = 0.005\n[run]\nstarts = -0.2,0.09\n")
    code, out, _ = run(capsys, "simulate", "--config", str(ini), "--eps", "0.01", "--dump-config")
    assert code == 0
    assert "eps = 0.01" in out and "starts = -0.2,0.09" in out


def test_sweep(capsys, monkeypatch):
    monkeypatch.setenv("DUCKTRAP_THREADS", "2")
    code, out, _ = run(capsys, "sweep", "--lambda-grid", "1.5*lH,0.5*lH", "--start=-0.2,0.09")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0].keys()) == list(SWEEP_COLUMNS)
    assert [r["outcome"] for r in rows] == ["ExitsInU0plus", "ExitsInU0plus"]
    assert rows[0]["half_cycle"] == "no"
    assert rows[1]["half_cycle"] == "HalfCycleExterior"


def test_sweep_errors(capsys):
    assert run(capsys, "sweep", "--start=-0.2,0.09")[0] == 2
    assert run(capsys, "sweep", "--lambda-grid", "1*lH")[0] == 2
    assert run(capsys, "sweep", "--lambda-grid", "100*lH", "--start=-0.2,0.09")[0] == 2
    assert run(capsys, "sweep", "--system", "fold", "--lambda-grid", "1*lH", "--start=0,0")[0] == 2


def test_criticals_leading(capsys):
    code, out, _ = run(capsys, "criticals", "--leading-only")
    assert code == 0
    doc = json.loads(out)
    assert doc["lambda_H"]["LeadingOrder"] == pytest.approx(-4.5e-3)
    assert doc["lambda_c"]["LeadingOrder"] == pytest.approx(2.5e-4)
    assert "Numerical" not in doc["lambda_c"]


def test_fold_scaling(capsys):
    code, out, _ = run(capsys, "fold-scaling", "--eps-list", "1e-4,1e-3,1e-2", "--x-in", "-0.4")
    assert code == 0
    assert abs(json.loads(out)["slope"] - 2 / 3) < 0.05
    assert run(capsys, "fold-scaling", "--eps-list", "1e-3")[0] == 2
    # x_in inside the fold window violates the precondition
    assert run(capsys, "fold-scaling", "--eps-list", "1e-4,1e-2", "--x-in", "-0.1")[0] == 2


def test_charts(capsys):
    code, out, _ = run(capsys, "charts", "pull", "--chart", "K1", "--point", "0.1,0.04,0.01,0.001")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["x1"] == pytest.approx(0.5) and res["r1"] == pytest.approx(0.2)
    code, out, _ = run(capsys, "charts", "push", "--chart", "K2f", "--point", "1,2,0.1")
    assert json.loads(out)["result"]["y"] == pytest.approx(0.02)
    assert run(capsys, "charts", "pull", "--chart", "K1", "--point", "1,2")[0] == 2
    assert run(capsys, "charts", "pull", "--chart", "K2", "--point", "0.1,0.1,0,0")[0] == 3


def test_bad_inputs(capsys):
    assert run(capsys, "simulate", "--eps", "abc", "--start=0,0")[0] == 2
    assert run(capsys, "simulate")[0] == 2
    assert run(capsys, "simulate", "--config", "/nonexistent.ini", "--start=0,0")[0] == 2
    with pytest.raises(SystemExit):
        main(["nosuchcommand"])
