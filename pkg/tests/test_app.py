import json
import math

import pandas as pd
import pytest

from app import main
from codec import RECORD_SIZE, unpack
from scenario import conflict_demo, write_scenario

LEFT_TURN = {"name": "left", "dx_m": 14.5, "dy_m": 21.5, "dpsi_rad": math.pi / 2}


def _write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


@pytest.fixture
def scenario_file(tmp_path):
    return _write(tmp_path / "left.json", LEFT_TURN)


def _run(tmp_path, *args):
    return main(["--out-dir", str(tmp_path / "out"), *args])


def test_plan_writes_all_outputs(tmp_path, scenario_file):
    assert _run(tmp_path, "plan", scenario_file) == 0
    out = tmp_path / "out"
    record = (out / "plan.bin").read_bytes()
    assert len(record) == RECORD_SIZE
    plan = json.loads((out / "plan.json").read_text())
    assert plan["summary"]["feasible"]
    assert unpack(record).model_dump() == plan["message"]
    frame = pd.read_csv(out / "trajectory.csv")
    assert list(frame.columns) == ["s", "x", "y", "psi", "kappa", "v", "a", "t"]
    assert frame["x"].iloc[-1] == pytest.approx(14.5, abs=1e-6)


def test_plan_is_deterministic(tmp_path, scenario_file):
    assert main(["--out-dir", str(tmp_path / "a"), "plan", scenario_file]) == 0
    assert main(["--out-dir", str(tmp_path / "b"), "plan", scenario_file]) == 0
    assert (tmp_path / "a" / "plan.bin").read_bytes() == (tmp_path / "b" / "plan.bin").read_bytes()


def test_decode_reproduces_sender_trajectory(tmp_path, scenario_file, capsys):
    assert _run(tmp_path, "plan", scenario_file) == 0
    out = tmp_path / "out"
    assert _run(tmp_path, "decode", str(out / "plan.bin"), "--out", "received.csv") == 0
    assert (out / "received.csv").read_text() == (out / "trajectory.csv").read_text()
    assert "decoded" in capsys.readouterr().out


def test_encode_round_trips_plan_json(tmp_path, scenario_file):
    assert _run(tmp_path, "plan", scenario_file) == 0
    out = tmp_path / "out"
    assert _run(tmp_path, "encode", str(out / "plan.json"), "--out", "again.bin") == 0
    assert (out / "again.bin").read_bytes() == (out / "plan.bin").read_bytes()


def test_chart_writes_boundary(tmp_path, monkeypatch):
    monkeypatch.setenv("CLOPLAN_THREADS", "1")
    assert _run(tmp_path, "chart", "--window", "14", "15", "21", "22", "--resolution", "1.0") == 0
    frame = pd.read_csv(tmp_path / "out" / "chart.csv")
    assert list(frame.columns) == ["dx", "dy", "side"]


def test_sweep_writes_csv_and_json(tmp_path, scenario_file):
    assert _run(tmp_path, "sweep", scenario_file) == 0
    data = json.loads((tmp_path / "out" / "swept.json").read_text())
    assert data["area"] > 0
    assert (tmp_path / "out" / "swept.csv").exists()


def test_disjoint_demo_is_clear(tmp_path):
    green, blue = conflict_demo("disjoint")
    first = write_scenario(green, tmp_path / "green.json")
    second = write_scenario(blue, tmp_path / "blue.json")
    assert _run(tmp_path, "conflict", str(first), str(second)) == 0
    report = json.loads((tmp_path / "out" / "conflict.json").read_text())
    assert report["verdict"] == "clear"


def test_merging_demo_exits_with_conflict(tmp_path, capsys):
    green, blue = conflict_demo("red")
    paired = write_scenario(green.model_copy(update={"other": blue}), tmp_path / "pair.json")
    assert _run(tmp_path, "conflict", str(paired)) == 4
    assert "reason=conflict" in capsys.readouterr().err


def test_conflict_without_second_agent(tmp_path, scenario_file, capsys):
    assert _run(tmp_path, "conflict", scenario_file) == 1
    assert "field=other" in capsys.readouterr().err


@pytest.mark.parametrize("content", ["{broken", json.dumps({**LEFT_TURN, "colour": "red"})])
def test_bad_scenario_exits_1(tmp_path, content, capsys):
    path = tmp_path / "bad.json"
    path.write_text(content, encoding="utf-8")
    assert _run(tmp_path, "plan", str(path)) == 1
    assert "reason=bad_input" in capsys.readouterr().err


def test_corrupted_record_exits_1(tmp_path, scenario_file, capsys):
    assert _run(tmp_path, "plan", scenario_file) == 0
    record = bytearray((tmp_path / "out" / "plan.bin").read_bytes())
    record[20] ^= 0xFF
    broken = tmp_path / "broken.bin"
    broken.write_bytes(bytes(record))
    assert _run(tmp_path, "decode", str(broken)) == 1
    assert "field=checksum" in capsys.readouterr().err


def test_unknown_command_exits_1(tmp_path):
    assert _run(tmp_path, "fly") == 1


def test_coincident_goal_exits_2(tmp_path, capsys):
    path = _write(tmp_path / "spin.json", {"dx_m": 0.0, "dy_m": 0.0, "dpsi_rad": 1.0})
    assert _run(tmp_path, "plan", path) == 2
    assert "reason=degenerate_chord" in capsys.readouterr().err


def test_tight_steering_limit_exits_3(tmp_path, scenario_file, capsys):
    limits = _write(tmp_path / "limits.json", {"gamma_max": 0.01})
    assert main(["--limits-file", limits, "--out-dir", str(tmp_path / "out"), "plan", scenario_file]) == 3
    assert "reason=infeasible_curvature" in capsys.readouterr().err
    assert not (tmp_path / "out" / "plan.bin").exists()


def test_start_above_speed_cap_exits_5(tmp_path, capsys):
    path = _write(tmp_path / "fast.json", {"dx_m": 20.0, "dy_m": 0.0, "dpsi_rad": 0.0, "v0_mps": 40.0})
    assert _run(tmp_path, "plan", path) == 5
    assert "reason=infeasible_start" in capsys.readouterr().err
