"""
Scenario files: validation, loading and the plan pipeline they drive
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from clothoid import Pose2D
from collision import VehicleGeometry
from config import CASE_NAMES
from exceptions import CloplanError, NoConvergence, ScenarioError
from path_planner import (
    FeasibilityResult, PathBoundaryCondition, ThreeClothoidPath, VehicleLimits,
    check_feasible, solve_g2, solve_tunable_grid
)
from velocity_planner import (
    ConstantAccelPlan, MotionPlan, check_constraints, constant_accel_plan, jerk_smooth, total_time
)

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)

Selection = Literal["min_time", "min_curvature", "min_length"]


class PoseSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    x_m: float
    y_m: float
    psi_rad: float

    def to_pose(self) -> Pose2D:
        return Pose2D(self.x_m, self.y_m, self.psi_rad)


class TunableGrid(BaseModel):
    """Candidate first/last clothoid lengths; every pair is solved."""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    s0_m: List[float] = Field(min_length=1)
    s2_m: List[float] = Field(min_length=1)
    selection: Selection = "min_time"

    @model_validator(mode="after")
    def _positive(self) -> "TunableGrid":
        if any(v <= 0 for v in self.s0_m + self.s2_m):
            raise ValueError("tunable lengths must be positive")
        return self


class Scenario(BaseModel):
    """
    One planning request. The goal is either a relative configuration
    (dx_m, dy_m, dpsi_rad) or a world goal pose; `start` anchors the plan
    in the world frame and defaults to the origin.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    name: str = "scenario"
    dx_m: Optional[float] = None
    dy_m: Optional[float] = None
    dpsi_rad: Optional[float] = None
    start: Optional[PoseSpec] = None
    goal: Optional[PoseSpec] = None
    kappa0_per_m: float = 0.0
    kappa2_per_m: float = 0.0
    s0_m: float = Field(5.0, gt=0)
    s2_m: float = Field(5.0, gt=0)
    tunables: Optional[TunableGrid] = None
    v0_mps: float = Field(5.0, ge=0)
    limits: VehicleLimits = VehicleLimits()
    geometry: VehicleGeometry = VehicleGeometry()
    other: Optional["Scenario"] = None

    @model_validator(mode="after")
    def _one_goal(self) -> "Scenario":
        relative = [v is not None for v in (self.dx_m, self.dy_m, self.dpsi_rad)]
        if any(relative) and not all(relative):
            raise ValueError("dx_m, dy_m and dpsi_rad must be given together")
        if all(relative) == (self.goal is not None):
            raise ValueError("give either dx_m/dy_m/dpsi_rad or a goal pose")
        return self

    @property
    def origin(self) -> Pose2D:
        return self.start.to_pose() if self.start else Pose2D(0.0, 0.0, 0.0)

    def boundary_condition(self) -> PathBoundaryCondition:
        if self.goal is not None:
            return PathBoundaryCondition.from_poses(
                self.origin, self.goal.to_pose(), self.kappa0_per_m, self.kappa2_per_m
            )
        return PathBoundaryCondition(self.dx_m, self.dy_m, self.dpsi_rad,
                                     self.kappa0_per_m, self.kappa2_per_m)


Scenario.model_rebuild()


def _first_error(e: ValidationError) -> Tuple[str, str]:
    error = e.errors()[0]
    field = ".".join(str(part) for part in error["loc"]) or "scenario"
    return field, error["msg"]


def load_model_file(path, model: Type[Model]) -> Tuple[Optional[Model], str]:
    """
    Load and validate a JSON file into a pydantic model.

    Returns:
        (instance, "ok") or (None, "<field>: <message>")
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        logger.error(f"Error reading {path}: {e}")
        return None, f"file: {e.strerror or e}"
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {path}: {e}")
        return None, f"json: line {e.lineno} column {e.colno}: {e.msg}"

    try:
        return model.model_validate(data), "ok"
    except ValidationError as e:
        field, message = _first_error(e)
        logger.error(f"Invalid {model.__name__} in {path}: {field}: {message}")
        return None, f"{field}: {message}"


def load_scenario(path) -> Tuple[Optional[Scenario], str]:
    return load_model_file(path, Scenario)


def read_scenario(path) -> Scenario:
    """load_scenario that raises ScenarioError instead of returning a message."""
    scenario, message = load_scenario(path)
    if scenario is None:
        field, _, detail = message.partition(": ")
        raise ScenarioError(field, detail or message)
    return scenario


@dataclass(frozen=True)
class ScenarioPlan:
    """Outcome of planning one scenario; `motion` is None when the path is infeasible."""
    scenario: Scenario
    path: ThreeClothoidPath
    feasibility: FeasibilityResult
    limits: VehicleLimits
    raw: Optional[ConstantAccelPlan] = None
    motion: Optional[MotionPlan] = None
    candidates: int = 1

    @property
    def feasible(self) -> bool:
        return self.feasibility.feasible

    def summary(self) -> dict:
        path = self.path
        summary = {
            "name": self.scenario.name,
            "lengths_m": list(path.lengths),
            "total_length_m": path.s_f,
            "max_abs_curvature_per_m": self.feasibility.max_abs_curvature,
            "kappa_max_per_m": self.limits.kappa_max,
            "peak_steering_rad": math.atan(self.limits.wheelbase * self.feasibility.max_abs_curvature),
            "feasible": self.feasible,
            "candidates": self.candidates,
        }
        if self.motion is not None:
            vplan = self.motion.velocity
            report = check_constraints(path, vplan, self.limits)
            summary.update({
                "case": CASE_NAMES[vplan.case_tag],
                "raw_time_s": total_time(self.raw),
                "total_time_s": total_time(vplan),
                "constraints_ok": report.ok,
            })
        return summary


def _motion(path: ThreeClothoidPath, v0: float,
            limits: VehicleLimits) -> Tuple[ConstantAccelPlan, MotionPlan]:
    raw = constant_accel_plan(path, v0, limits)
    return raw, MotionPlan(path, jerk_smooth(raw, path, limits))


def _select(paths: List[ThreeClothoidPath], scenario: Scenario, limits: VehicleLimits,
            selection: Selection) -> Tuple[ThreeClothoidPath, Optional[Tuple[ConstantAccelPlan, MotionPlan]]]:
    if selection == "min_length":
        return min(paths, key=lambda p: p.s_f), None
    if selection == "min_curvature":
        return min(paths, key=lambda p: check_feasible(p, limits).max_abs_curvature), None

    best = None
    last_error: Optional[CloplanError] = None
    for path in paths:
        try:
            raw, motion = _motion(path, scenario.v0_mps, limits)
        except CloplanError as e:
            logger.debug(f"candidate s0={path.s0} s2={path.s2} dropped: {e}")
            last_error = e
            continue
        if best is None or total_time(motion.velocity) < total_time(best[1].velocity):
            best = (raw, motion)
    if best is None:
        raise last_error
    return best[1].path, best


def plan_scenario(scenario: Scenario, limits: Optional[VehicleLimits] = None,
                  with_velocity: bool = True) -> ScenarioPlan:
    """
    Solve the path, check curvature and, for a feasible path, plan the speed.

    Args:
        scenario: validated scenario
        limits: override for the scenario's own limits
        with_velocity: skip velocity planning when only the geometry is needed

    Raises:
        NoConvergence: no (s0, s2) candidate could be solved
        DegenerateChord: start and goal coincide
        InfeasibleStart, SmoothingOverrun: velocity planning failed
    """
    limits = limits or scenario.limits
    bc = scenario.boundary_condition()
    origin = scenario.origin

    if scenario.tunables is None:
        path = solve_g2(bc, scenario.s0_m, scenario.s2_m, origin=origin, limits=limits)
        candidates = 1
        chosen = None
    else:
        grid = scenario.tunables
        solved = solve_tunable_grid(bc, grid.s0_m, grid.s2_m, origin=origin, limits=limits)
        if not solved:
            raise NoConvergence(f"no tunable pair of {scenario.name} could be solved")
        feasible = [p for p in solved if check_feasible(p, limits).feasible]
        candidates = len(solved)
        logger.info(f"{scenario.name}: {len(feasible)} of {len(solved)} candidates feasible")
        if not feasible:
            path = min(solved, key=lambda p: check_feasible(p, limits).max_abs_curvature)
            chosen = None
        elif with_velocity:
            path, chosen = _select(feasible, scenario, limits, grid.selection)
        else:
            path, chosen = _select(feasible, scenario, limits, "min_length"
                                   if grid.selection == "min_time" else grid.selection)

    feasibility = check_feasible(path, limits)
    if not feasibility.feasible:
        logger.info(f"{scenario.name}: max |kappa| {feasibility.max_abs_curvature:.4g} "
                    f"exceeds {limits.kappa_max:.4g}")
        return ScenarioPlan(scenario, path, feasibility, limits, candidates=candidates)
    if not with_velocity:
        return ScenarioPlan(scenario, path, feasibility, limits, candidates=candidates)

    raw, motion = chosen or _motion(path, scenario.v0_mps, limits)
    return ScenarioPlan(scenario, path, feasibility, limits, raw, motion, candidates)


# Two vehicles meeting at an intersection; the green vehicle comes from the
# south, the blue one from the north, both leave towards the west.
GREEN_START = PoseSpec(x_m=0.0, y_m=-15.5, psi_rad=math.pi / 2)
BLUE_START = PoseSpec(x_m=0.0, y_m=15.5, psi_rad=-math.pi / 2)
RED_POINT = PoseSpec(x_m=-15.5, y_m=0.0, psi_rad=math.pi)
BLUE_POINT = PoseSpec(x_m=-12.0, y_m=-3.5, psi_rad=math.pi)

DemoTarget = Literal["red", "blue", "disjoint"]


def conflict_demo(target: DemoTarget) -> Tuple[Scenario, Scenario]:
    """
    Left turn (green) against right turn (blue) at a four-way intersection.

    "red": both leave through the far exit lane and merge there.
    "blue": both use the near exit point and arrive at different times.
    "disjoint": green takes the near exit, blue the far one; no crossing.
    """
    goals = {
        "red": (RED_POINT, RED_POINT),
        "blue": (BLUE_POINT, BLUE_POINT),
        "disjoint": (BLUE_POINT, RED_POINT),
    }
    if target not in goals:
        raise ScenarioError("target", f"unknown demo target {target!r}")
    green_goal, blue_goal = goals[target]
    green = Scenario(name=f"green-{target}", start=GREEN_START, goal=green_goal, v0_mps=5.0)
    blue = Scenario(name=f"blue-{target}", start=BLUE_START, goal=blue_goal, v0_mps=5.0)
    return green, blue


def write_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(scenario.model_dump_json(indent=2, exclude_none=True), encoding="utf-8")
    return path
