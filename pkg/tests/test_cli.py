import csv
import json
import math

import numpy as np
import pytest

from realgit.cli import dumps, execute, export_trace, main, parse_scenario
from realgit.errors import ScenarioError
from realgit.flows import FlowTrajectory

LINEAR = {"group": {"kind": "SL_R", "n": 2}, "model": {"kind": "linear"}, "point": [0, 1]}
PROJ = {"group": {"kind": "SL_R", "n": 2}, "model": {"kind": "projective"}}


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj), encoding="utf-8")
    return str(p)


def run(tmp_path, capsys, obj, *flags):
    code = main([write(tmp_path, obj), *flags])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_linear(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, dict(LINEAR, command="classify"))
    assert code == 0
    assert json.loads(out)["result"]["klass"] == "StrictlySemistable"


def test_max_weight_fixed_point(tmp_path, capsys):
    sc = dict(PROJ, point=[0, 1], direction=[[1, 0], [0, -1]], command="max-weight")
    code, out, _ = run(tmp_path, capsys, sc)
    assert code == 0
    assert json.loads(out)["result"]["value"] == -1.0


def test_infinite_weight_serialized(tmp_path, capsys):
    sc = dict(LINEAR, point=[1, 0], direction=[[1, 0], [0, -1]], command="max-weight")
    code, out, _ = run(tmp_path, capsys, sc)
    assert code == 0
    assert json.loads(out)["result"]["value"] == "inf"


def test_malformed_direction(tmp_path, capsys):
    sc = dict(LINEAR, direction=[[1, 2], [0, -1]], command="max-weight")
    code, _out, err = run(tmp_path, capsys, sc)
    assert code == 1
    assert "not Hermitian" in err


@pytest.mark.parametrize("bad", [
    {"command": "nope"},
    dict(LINEAR, command="classify", point=[1, 2, 3]),
    dict(LINEAR, command="classify", params={"bogus": 1}),
    dict(LINEAR, command="flow"),
    {"group": {"kind": "SL_Q", "n": 2}, "model": {"kind": "linear"}, "point": [1, 0], "command": "classify"},
])
def test_malformed_scenarios(tmp_path, capsys, bad):
    code, _out, err = run(tmp_path, capsys, bad)
    assert code == 1
    assert "malformed" in err


def test_unreadable_file(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json", encoding="utf-8")
    assert main([str(p)]) == 1


def test_budget_exit(tmp_path, capsys):
    sc = {"group": {"kind": "SL_C", "n": 2}, "model": {"kind": "configuration", "weights": [1, 1, 1]},
          "point": [[1, 0], [0, 1], [1, 2]], "command": "kempf-ness"}
    code, _out, err = run(tmp_path, capsys, sc, "--budget", "2")
    assert code == 2
    assert "BudgetExceeded" in err


def test_trace_write_failure_is_numeric_exit(tmp_path, capsys):
    sc = dict(LINEAR, direction=[[1, 0], [0, -1]], command="flow")
    code, _out, _err = run(tmp_path, capsys, sc, "--trace", str(tmp_path))
    assert code == 3


def test_flow_trace_closed_form(tmp_path, capsys):
    sc = dict(LINEAR, direction=[[1, 0], [0, -1]], command="flow")
    trace = tmp_path / "trace.csv"
    code, _out, _err = run(tmp_path, capsys, sc, "--trace", str(trace), "--t-max", "5")
    assert code == 0
    raw = trace.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert list(rows[0]) == ["t", "lambda", "speed2", "f"]
    for r in rows:
        assert float(r["lambda"]) == pytest.approx(-0.5 * math.exp(-2 * float(r["t"])), abs=1e-9)


def test_fixed_point_trace_constant(tmp_path):
    traj = FlowTrajectory([0.0, 1.0], [None, None], [-1.0, -1.0], [0.0, 0.0], [0.25, 0.25])
    path = tmp_path / "t.csv"
    export_trace(traj, str(path))
    assert path.read_text().splitlines() == ["t,lambda,speed2,f", "0.0,-1.0,0.0,0.25", "1.0,-1.0,0.0,0.25"]


def test_empty_trace_refused(tmp_path):
    with pytest.raises(ValueError):
        export_trace(FlowTrajectory([], [], [], [], []), str(tmp_path / "e.csv"))


def test_determinism_and_echo(tmp_path, capsys):
    sc = {"group": {"kind": "SL_C", "n": 2}, "model": {"kind": "configuration", "weights": [1, 1, 1, 1]},
          "point": [[1, 0], [1, 0], [0, 1], ["1+1j", {"re": 0.5, "im": -2}]], "command": "classify"}
    _c, a, _ = run(tmp_path, capsys, sc)
    _c, b, _ = run(tmp_path, capsys, sc)
    assert a == b
    assert json.loads(a)["scenario"] == sc


def test_stratify_and_csv_report(tmp_path, capsys):
    sc = {"group": {"kind": "DIAG_TORUS_C", "n": 2}, "model": {"kind": "projective"},
          "points": [[1, 0], [0, 1], [1, "0+1j"]], "command": "stratify"}
    code, out, _ = run(tmp_path, capsys, sc, "--report", "csv")
    assert code == 0
    rows = dict(list(csv.reader(out.splitlines()))[1:])
    assert rows["result.labels[0].orbit_key[0]"] == "0.5"
    assert rows["result.labels[2].orbit_key[0]"] == "0.0"


def test_flags_override_params():
    rep = execute(dict(LINEAR, command="classify", params={"tol": 1e-6}))
    assert rep["parameters"]["tol"] == 1e-6
    assert "timing_seconds" not in rep
    assert "timing_seconds" in execute(dict(LINEAR, command="classify"), timing=True)


def test_verify_subset():
    rep = execute({"command": "verify", "criteria": [1], "params": {"seed": 3}})
    assert rep["result"]["all_passed"]
    assert [c["number"] for c in rep["result"]["criteria"]] == [1]
    json.loads(dumps(rep))


def test_complex_point_rejected_for_real_model():
    with pytest.raises(ScenarioError):
        parse_scenario(dict(LINEAR, command="classify", point=["1j", 0]))


def test_group_element_checked():
    with pytest.raises(ScenarioError):
        parse_scenario(dict(LINEAR, command="kempf-ness", group_element=[[2, 0], [0, 2]]))
    rep = execute(dict(LINEAR, command="kempf-ness", group_element=[[np.e, 0], [0, 1 / np.e]]))
    assert rep["result"]["value"] == pytest.approx(0.25 * (np.exp(-2) - 1))
