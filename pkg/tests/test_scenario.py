import json
import math

import pytest

from exceptions import CloplanError, ScenarioError
from path_planner import VehicleLimits, check_feasible, solve_tunable_grid
from scenario import (
    BLUE_START, GREEN_START, RED_POINT, Scenario, conflict_demo, load_scenario, plan_scenario,
    read_scenario, write_scenario
)
from velocity_planner import plan_motion, total_time


def _write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_relative_goal_scenario(tmp_path):
    path = _write(tmp_path, {"name": "left", "dx_m": 14.5, "dy_m": 21.5, "dpsi_rad": math.pi / 2})
    scenario, message = load_scenario(path)
    assert message == "ok"
    assert scenario.s0_m == 5.0 and scenario.v0_mps == 5.0
    assert scenario.origin.x == 0.0 and scenario.origin.psi == 0.0
    bc = scenario.boundary_condition()
    assert (bc.dx, bc.dy, bc.dpsi) == pytest.approx((14.5, 21.5, math.pi / 2))


def test_goal_pose_scenario():
    scenario = Scenario(start=GREEN_START, goal=RED_POINT)
    bc = scenario.boundary_condition()
    assert (bc.dx, bc.dy) == pytest.approx((15.5, 15.5))
    assert bc.dpsi == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("data, field", [
    ({"dx_m": 1.0, "dy_m": 2.0}, "dx_m"),
    ({"dx_m": 1.0, "dy_m": 2.0, "dpsi_rad": 0.0, "goal": {"x_m": 1, "y_m": 2, "psi_rad": 0}}, "goal"),
    ({"dx_m": 1.0, "dy_m": 2.0, "dpsi_rad": 0.0, "speed": 3.0}, "speed"),
    ({"dx_m": 1.0, "dy_m": 2.0, "dpsi_rad": 0.0, "s0_m": -1.0}, "s0_m"),
    ({"dx_m": 1.0, "dy_m": 2.0, "dpsi_rad": 0.0, "limits": {"a_max": -1}}, "limits"),
])
def test_invalid_scenarios_are_reported(tmp_path, data, field):
    scenario, message = load_scenario(_write(tmp_path, data))
    assert scenario is None
    assert message != "ok"
    if field in ("speed", "s0_m", "limits"):
        assert message.startswith(field)


def test_read_scenario_raises_with_field(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError) as info:
        read_scenario(path)
    assert info.value.field == "json"
    with pytest.raises(ScenarioError) as info:
        read_scenario(tmp_path / "missing.json")
    assert info.value.field == "file"


def test_write_and_read_back(tmp_path):
    green, blue = conflict_demo("red")
    nested = green.model_copy(update={"other": blue})
    restored = read_scenario(write_scenario(nested, tmp_path / "pair.json"))
    assert restored == nested
    assert restored.other.start == BLUE_START


def test_plan_summary():
    planned = plan_scenario(Scenario(name="left", dx_m=14.5, dy_m=21.5, dpsi_rad=math.pi / 2))
    assert planned.feasible and planned.motion is not None
    summary = planned.summary()
    assert summary["name"] == "left"
    assert summary["total_length_m"] == pytest.approx(sum(summary["lengths_m"]))
    assert summary["max_abs_curvature_per_m"] <= summary["kappa_max_per_m"]
    assert summary["case"] in ("LL", "GG", "LG", "GL")
    assert summary["constraints_ok"]
    assert summary["total_time_s"] == pytest.approx(summary["raw_time_s"], rel=0.05)
    json.dumps(summary)


def test_tight_limits_make_the_path_infeasible():
    scenario = Scenario(dx_m=14.5, dy_m=21.5, dpsi_rad=math.pi / 2)
    planned = plan_scenario(scenario, VehicleLimits(gamma_max=0.01))
    assert not planned.feasible
    assert planned.motion is None
    assert "case" not in planned.summary()


def test_geometry_only_plan():
    planned = plan_scenario(Scenario(dx_m=14.5, dy_m=21.5, dpsi_rad=math.pi / 2), with_velocity=False)
    assert planned.feasible and planned.motion is None


@pytest.mark.parametrize("selection", ["min_time", "min_curvature", "min_length"])
def test_tunable_selection(selection, limits):
    grid = [4.0, 5.0, 6.0]
    scenario = Scenario(dx_m=14.5, dy_m=21.5, dpsi_rad=math.pi / 2,
                        tunables={"s0_m": grid, "s2_m": grid, "selection": selection})
    planned = plan_scenario(scenario)
    assert planned.candidates >= 2
    assert planned.feasible

    bc = scenario.boundary_condition()
    feasible = [p for p in solve_tunable_grid(bc, grid, grid, limits=limits)
                if check_feasible(p, limits).feasible]
    if selection == "min_length":
        assert planned.path.s_f == pytest.approx(min(p.s_f for p in feasible))
    elif selection == "min_curvature":
        best = min(check_feasible(p, limits).max_abs_curvature for p in feasible)
        assert planned.feasibility.max_abs_curvature == pytest.approx(best)
    else:
        times = []
        for path in feasible:
            try:
                times.append(total_time(plan_motion(path, scenario.v0_mps, limits).velocity))
            except CloplanError:
                continue
        assert planned.summary()["total_time_s"] == pytest.approx(min(times))


def test_demo_scenarios():
    green, blue = conflict_demo("blue")
    assert green.start == GREEN_START and blue.start == BLUE_START
    assert green.goal == blue.goal
    for scenario in (green, blue):
        assert plan_scenario(scenario).feasible
    with pytest.raises(ScenarioError):
        conflict_demo("purple")
