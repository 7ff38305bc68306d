import math

import numpy as np
import pytest

from clothoid import Pose2D, normalize_angle
from exceptions import DegenerateChord, InvalidArgument, NoConvergence, OutOfRange
from path_planner import (
    ChartWindow, G2Unknowns, PathBoundaryCondition, ThreeClothoidPath, VehicleLimits,
    check_feasible, curvature_at, feasibility_boundary, is_feasible_goal, path_poses,
    relative_configuration, residuals, sample_path, scaled_residuals, solve_g2,
    solve_tunable_grid
)

LEFT_TURN = PathBoundaryCondition(14.5, 21.5, math.pi / 2, 0.0, 0.0)


def _assert_reaches(path, bc, tol=1e-6):
    end = path.end
    assert end.x == pytest.approx(path.origin.x + bc.dx, abs=tol)
    assert end.y == pytest.approx(path.origin.y + bc.dy, abs=tol)
    assert normalize_angle(end.psi - path.origin.psi - bc.dpsi) == pytest.approx(0.0, abs=1e-8)


def test_default_limits():
    limits = VehicleLimits()
    assert limits.kappa_max == pytest.approx(0.2)
    assert limits.wheelbase == pytest.approx(2.8868, abs=1e-4)


def test_limits_reject_unknown_and_non_finite():
    with pytest.raises(ValueError):
        VehicleLimits(top_speed=3.0)
    with pytest.raises(ValueError):
        VehicleLimits(a_max=math.inf)


def test_left_turn_solution(left_turn_path, limits):
    path = left_turn_path
    _assert_reaches(path, LEFT_TURN)
    assert np.max(np.abs(scaled_residuals(path, LEFT_TURN))) <= 1e-9
    assert path.s_f >= LEFT_TURN.chord
    assert path.s0 == 5.0 and path.s2 == 5.0
    assert check_feasible(path, limits).feasible


def test_end_curvatures_are_exact(left_turn_path):
    assert curvature_at(left_turn_path, 0.0) == left_turn_path.kappa0
    assert curvature_at(left_turn_path, left_turn_path.s_f) == left_turn_path.kappa2


def test_curvature_is_continuous_at_breakpoints(left_turn_path):
    path = left_turn_path
    for b in path.breakpoints:
        left = curvature_at(path, b - 1e-12)
        right = curvature_at(path, b)
        assert left == pytest.approx(right, abs=1e-10)


def test_residual_vector_of_solution(left_turn_path):
    path = left_turn_path
    unknowns = G2Unknowns(path.mid.x, path.mid.y, path.mid.psi, path.kappa1,
                          path.kp0, path.kp1, path.kp2, path.s1)
    res = residuals(LEFT_TURN, path.s0, path.s2, unknowns)
    res[4:6] = normalize_angle(res[4:6])
    assert np.max(np.abs(res)) <= 1e-7


def test_straight_goal():
    bc = PathBoundaryCondition(10.0, 0.0, 0.0)
    path = solve_g2(bc, 2.0, 2.0)
    assert path.s_f == pytest.approx(10.0, abs=1e-8)
    assert path.s1 == pytest.approx(6.0, abs=1e-8)
    assert np.max(np.abs(curvature_at(path, np.linspace(0, path.s_f, 50)))) < 1e-9
    _assert_reaches(path, bc)


def test_world_frame_goal():
    start = Pose2D(3.0, -2.0, 0.4)
    goal = Pose2D(-10.0, 18.0, 0.4 + math.pi / 2)
    dx, dy, dpsi = relative_configuration(start, goal)
    assert math.hypot(dx, dy) == pytest.approx(math.hypot(-13.0, 20.0))
    path = solve_g2(PathBoundaryCondition.from_poses(start, goal), 5.0, 5.0, origin=start)
    assert path.end.x == pytest.approx(goal.x, abs=1e-6)
    assert path.end.y == pytest.approx(goal.y, abs=1e-6)
    assert normalize_angle(path.end.psi - goal.psi) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("dpsi", [1.0, 0.0])
def test_coincident_start_and_goal(dpsi):
    with pytest.raises(DegenerateChord):
        solve_g2(PathBoundaryCondition(0.0, 0.0, dpsi), 5.0, 5.0)


def test_invalid_lengths_and_boundary():
    with pytest.raises(InvalidArgument):
        solve_g2(LEFT_TURN, 0.0, 5.0)
    with pytest.raises(InvalidArgument):
        PathBoundaryCondition(math.nan, 1.0, 0.0)


def test_from_parameters_derives_end_sharpness(left_turn_path):
    path = left_turn_path
    rebuilt = ThreeClothoidPath.from_parameters(
        path.origin, path.s0, path.s1, path.s2, path.kappa0, path.kappa1, path.kappa2, path.kp1
    )
    assert rebuilt == path


def test_max_curvature_matches_dense_sampling(left_turn_path, limits):
    result = check_feasible(left_turn_path, limits)
    s = np.linspace(0.0, left_turn_path.s_f, int(left_turn_path.s_f / 0.001) + 1)
    dense = np.max(np.abs(curvature_at(left_turn_path, s)))
    assert dense <= result.max_abs_curvature + 1e-12
    assert abs(curvature_at(left_turn_path, result.argmax_s)) == pytest.approx(result.max_abs_curvature)


def test_sample_path(left_turn_path):
    frame = sample_path(left_turn_path, 0.5)
    assert list(frame.columns) == ["s", "x", "y", "psi", "kappa"]
    assert frame["s"].iloc[0] == 0.0
    assert frame["s"].iloc[-1] == left_turn_path.s_f
    assert frame["s"].is_monotonic_increasing
    assert set(left_turn_path.breakpoints) <= set(frame["s"])
    with pytest.raises(OutOfRange):
        path_poses(left_turn_path, [left_turn_path.s_f + 0.1])


def test_tunable_family_shares_boundary_condition():
    paths = solve_tunable_grid(LEFT_TURN, [3.0, 5.0, 7.0], [3.0, 5.0])
    assert len(paths) >= 4
    assert len({(p.s0, p.s2) for p in paths}) == len(paths)
    for path in paths:
        _assert_reaches(path, LEFT_TURN)


def test_feasible_goal_classification():
    assert is_feasible_goal(14.5, 21.5, math.pi / 2, 0.0, 5.0)
    assert not is_feasible_goal(-20.0, 2.0, math.pi / 2, 0.0, 5.0)


def test_chart_rejects_bad_arguments():
    window = ChartWindow(10.0, 12.0, 10.0, 12.0)
    with pytest.raises(InvalidArgument):
        feasibility_boundary(math.pi / 2, 0.0, 5.0, window, 0.0)
    with pytest.raises(InvalidArgument):
        feasibility_boundary(math.pi / 2, 0.0, 5.0, ChartWindow(12.0, 10.0, 10.0, 12.0), 1.0)


@pytest.mark.slow
def test_chart_boundary_is_on_curvature_limit_and_symmetric():
    limits = VehicleLimits()
    window = ChartWindow(4.0, 16.0, 4.0, 16.0)
    chart = feasibility_boundary(math.pi / 2, 0.0, 5.0, window, 1.0, limits)
    frame = chart.to_frame()
    assert list(frame.columns) == ["dx", "dy", "side"]
    assert not chart.boundary.empty
    for dx, dy in chart.boundary[["dx", "dy"]].itertuples(index=False):
        path = solve_g2(PathBoundaryCondition(dx, dy, math.pi / 2), 5.0, 5.0)
        peak = check_feasible(path, limits).max_abs_curvature
        assert abs(peak - limits.kappa_max) <= 1e-4
        # mirrored goal lies on the boundary as well
        mirrored = solve_g2(PathBoundaryCondition(dy, dx, math.pi / 2), 5.0, 5.0)
        assert abs(check_feasible(mirrored, limits).max_abs_curvature - limits.kappa_max) <= 1e-3


@pytest.mark.slow
def test_random_goals_are_reached_exactly():
    rng = np.random.default_rng(2024)
    solved = 0
    for _ in range(1000):
        dpsi = float(rng.choice([math.pi / 4, math.pi / 2, 3 * math.pi / 4]))
        kappa0 = float(rng.choice([0.0, 0.05, -0.05]))
        bc = PathBoundaryCondition(rng.uniform(10, 30), rng.uniform(10, 30), dpsi, kappa0, 0.0)
        try:
            path = solve_g2(bc, 5.0, 5.0)
        except NoConvergence:
            continue
        solved += 1
        _assert_reaches(path, bc)
        assert np.max(np.abs(scaled_residuals(path, bc))) <= 1e-9
        assert curvature_at(path, 0.0) == kappa0 and curvature_at(path, path.s_f) == 0.0
    assert solved >= 500
