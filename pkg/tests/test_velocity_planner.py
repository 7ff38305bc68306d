import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from clothoid import Pose2D
from config import CASE_GG, CASE_GL, CASE_LG, CASE_LL
from exceptions import CloplanError, InfeasibleStart, OutOfRange, SmoothingOverrun, StoppedFlow
from path_planner import PathBoundaryCondition, ThreeClothoidPath, VehicleLimits, solve_g2
from velocity_planner import (
    ConstantAccelPlan, SmoothedVelocityPlan, VelocityBound, acceleration_at, check_constraints,
    constant_accel_plan, jerk_smooth, plan_motion, time_at, times_at, total_time, vbar,
    velocity_at, velocity_profile
)


def _raw(a0, a1, a2, v0=5.0, length=20.0):
    speeds = [v0]
    for a in (a0, a1, a2):
        speeds.append(math.sqrt(max(speeds[-1] ** 2 + 2 * a * length, 0.0)))
    return ConstantAccelPlan(a0, a1, a2, *speeds, length, length, length)


@pytest.fixture(scope="module")
def straight_path():
    return solve_g2(PathBoundaryCondition(10.0, 0.0, 0.0), 2.0, 2.0)


@pytest.fixture(scope="module")
def circle_path():
    return ThreeClothoidPath.from_parameters(Pose2D(0, 0, 0), 2.0, 2.0, 2.0, 0.2, 0.2, 0.2, 0.0)


def test_bound_on_straight_path_is_speed_cap(straight_path, limits):
    s = np.linspace(0.0, straight_path.s_f, 21)
    assert np.all(vbar(straight_path, limits, s) == limits.v_cap)


def test_bound_on_circle_is_lateral_limit(circle_path, limits):
    bound = VelocityBound(circle_path, limits)
    assert bound(1.0) == pytest.approx(math.sqrt(3.0 / 0.2))
    assert np.all(np.isinf(bound.steering(np.array([0.5, 3.0]))))


def test_straight_plan_accelerates_at_limit(straight_path, limits):
    raw = constant_accel_plan(straight_path, 5.0, limits)
    assert (raw.a0, raw.a1, raw.a2) == (limits.a_max,) * 3
    assert raw.vf == pytest.approx(math.sqrt(85.0))
    assert total_time(raw) == pytest.approx((math.sqrt(85.0) - 5.0) / 3.0, rel=1e-9)

    smoothed = jerk_smooth(raw, straight_path, limits)
    assert smoothed.case_tag == CASE_LL
    assert (smoothed.smooth_a, smoothed.smooth_b) == (0.0, 0.0)
    assert total_time(smoothed) == pytest.approx(total_time(raw), rel=1e-9)


def test_start_above_bound_is_rejected(circle_path, limits):
    with pytest.raises(InfeasibleStart):
        constant_accel_plan(circle_path, 5.0, limits)


def test_time_from_standstill():
    plan = ConstantAccelPlan(1.0, 1.0, 1.0, 0.0, math.sqrt(2), 2.0, math.sqrt(6), 1.0, 1.0, 1.0)
    assert time_at(plan, 0.0) == 0.0
    assert time_at(plan, 0.5) == pytest.approx(1.0)
    assert total_time(plan) == pytest.approx(math.sqrt(6.0), rel=1e-9)


def test_stopping_before_the_end_raises():
    plan = ConstantAccelPlan(-1.0, -1.0, -1.0, 2.0, 0.0, 0.0, 0.0, 3.0, 3.0, 3.0)
    assert time_at(plan, 1.0) == pytest.approx(2.0 / (2.0 + math.sqrt(2.0)))
    with pytest.raises(StoppedFlow):
        time_at(plan, 2.5)


def test_evaluation_outside_plan_raises(left_turn_plan):
    with pytest.raises(OutOfRange):
        velocity_at(left_turn_plan.velocity, left_turn_plan.velocity.s_f + 1.0)


@pytest.mark.parametrize("accels, case", [
    ((0.0, 0.5, 1.0), CASE_LL),
    ((1.0, 0.5, 0.0), CASE_GG),
    ((0.0, 0.5, 0.0), CASE_LG),
    ((0.5, 0.0, 0.5), CASE_GL),
])
def test_smoothing_cases(accels, case, limits):
    raw = _raw(*accels)
    plan = jerk_smooth(raw, limits=limits)
    assert plan.case_tag == case
    assert plan.smooth_a > 0 and plan.smooth_b > 0

    table = plan.pieces
    assert table.start[0] == 0.0 and table.end[-1] == pytest.approx(plan.s_f)
    for k in range(table.start.size - 1):
        u = table.end[k] - table.start[k]
        end_sq = table.anchor[k] + 2 * table.accel[k] * u + table.jerk_s[k] * u * u
        assert end_sq == pytest.approx(table.anchor[k + 1], abs=1e-9)
        assert table.accel[k] + table.jerk_s[k] * u == pytest.approx(table.accel[k + 1], abs=1e-12)

    s = np.linspace(0.0, plan.s_f, 6001)
    jerk = np.abs(table.jerk_s[np.searchsorted(table.start, s, side="right") - 1]) * velocity_at(plan, s)
    assert np.max(jerk) <= limits.j_max + 1e-9
    assert total_time(plan) == pytest.approx(total_time(raw), rel=0.05)


def test_ramp_that_does_not_fit_raises(limits):
    raw = _raw(3.0, -3.0, 0.0, length=1.0)
    with pytest.raises(SmoothingOverrun) as info:
        jerk_smooth(raw, limits=limits)
    assert info.value.junction == 1
    assert info.value.required > info.value.available == 1.0


def test_plan_rejects_bad_smoothing_fields():
    with pytest.raises(ValueError):
        SmoothedVelocityPlan(CASE_LL, 5.0, 5.0, 5.0, 0.0, 0.0, 0.0, 2.0,
                             5.0, 5.0, 5.0, 6.0, 0.0)
    with pytest.raises(ValueError):
        SmoothedVelocityPlan(7, 5.0, 5.0, 5.0, 0.0, 0.0, 0.0, 2.0, 5.0, 5.0, 5.0, 0.0, 0.0)


def test_left_turn_plan_respects_every_limit(left_turn_path, left_turn_plan, limits):
    vplan = left_turn_plan.velocity
    report = check_constraints(left_turn_path, vplan, limits)
    assert report.ok, report

    s = np.linspace(0.0, vplan.s_f, int(vplan.s_f / 0.01) + 1)
    v = velocity_at(vplan, s)
    assert np.all(v <= VelocityBound(left_turn_path, limits)(s) + 1e-9)
    a = acceleration_at(vplan, s)
    assert np.all((a >= limits.a_min - 1e-9) & (a <= limits.a_max + 1e-9))
    t = times_at(vplan, s)
    assert np.all(np.diff(t) > 0)
    assert np.max(np.abs(np.diff(a) / np.diff(t))) <= limits.j_max + 1e-3

    raw = constant_accel_plan(left_turn_path, 5.0, limits)
    assert total_time(vplan) == pytest.approx(total_time(raw), rel=0.05)
    assert math.isfinite(total_time(vplan)) and total_time(vplan) > 0


def test_left_turn_travel_time(left_turn_path, left_turn_plan, limits):
    raw = constant_accel_plan(left_turn_path, 5.0, limits)
    speeds = (raw.v0, raw.v1, raw.v2, raw.vf)
    closed_form = sum(2 * length / (speeds[k] + speeds[k + 1])
                      for k, length in enumerate(left_turn_path.lengths))
    assert total_time(raw) == pytest.approx(closed_form, rel=1e-9)

    vplan = left_turn_plan.velocity
    s = np.linspace(0.0, vplan.s_f, 200001)
    travel = total_time(vplan)
    assert travel == pytest.approx(trapezoid(1.0 / velocity_at(vplan, s), s), rel=1e-5)
    assert travel == pytest.approx(closed_form, rel=0.05)
    # bounded by the slowest and fastest speeds reached
    v = velocity_at(vplan, s)
    assert vplan.s_f / v.max() <= travel <= vplan.s_f / v.min()


def test_velocity_profile_export(left_turn_plan):
    frame = velocity_profile(left_turn_plan.velocity, 0.5)
    assert list(frame.columns) == ["s", "v", "a", "t"]
    assert frame["s"].iloc[-1] == pytest.approx(left_turn_plan.velocity.s_f)
    assert frame["t"].iloc[0] == 0.0


@pytest.mark.slow
def test_random_plans_respect_limits():
    rng = np.random.default_rng(11)
    limits = VehicleLimits()
    checked = 0
    for _ in range(2000):
        if checked == 200:
            break
        dpsi = float(rng.choice([math.pi / 4, math.pi / 2]))
        bc = PathBoundaryCondition(rng.uniform(12, 30), rng.uniform(12, 30), dpsi)
        try:
            path = solve_g2(bc, 5.0, 5.0)
            plan = plan_motion(path, rng.uniform(0.5, 3.5), limits)
        except CloplanError:
            continue
        checked += 1
        assert check_constraints(path, plan.velocity, limits).ok
    assert checked == 200
