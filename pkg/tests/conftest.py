import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from path_planner import PathBoundaryCondition, VehicleLimits, solve_g2  # noqa: E402
from velocity_planner import plan_motion  # noqa: E402

LEFT_TURN = PathBoundaryCondition(14.5, 21.5, math.pi / 2, 0.0, 0.0)


@pytest.fixture(scope="session")
def limits():
    return VehicleLimits()


@pytest.fixture(scope="session")
def left_turn_path(limits):
    return solve_g2(LEFT_TURN, 5.0, 5.0, limits=limits)


@pytest.fixture(scope="session")
def left_turn_plan(left_turn_path, limits):
    return plan_motion(left_turn_path, 5.0, limits)
