"""
Three-clothoid G2 path planning: boundary value solver, curvature
feasibility and feasibility charts
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from clothoid import ClothoidSegment, Pose2D, fresnel_cs_batch, normalize_angle, poses_at
from config import (
    A_LAT_MAX, A_MAX, A_MIN, BOUNDARY_ACCEPT_TOL, BOUNDARY_BISECT_XTOL,
    BOUNDARY_XTOL_FACTOR, CHART_COLUMNS, CHORD_MIN, FD_REL_STEP, GAMMA_MAX,
    J_MAX, NEWTON_MAX_HALVINGS, NEWTON_MAX_ITER, NEWTON_TOL, OMEGA_MAX,
    RESIDUAL_CHECK_TOL, SEED_S1_FACTORS, SEED_S1_MIN_FRACTION, V_CAP, WHEELBASE
)
from exceptions import DegenerateChord, InvalidArgument, NoConvergence, OutOfRange

logger = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-12


# Domain types

@dataclass(frozen=True)
class PathBoundaryCondition:
    """Goal pose relative to the start frame plus both end curvatures."""
    dx: float
    dy: float
    dpsi: float
    kappa0: float = 0.0
    kappa2: float = 0.0

    def __post_init__(self):
        values = (self.dx, self.dy, self.dpsi, self.kappa0, self.kappa2)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgument(f"boundary condition must be finite, got {values}")
        object.__setattr__(self, "dpsi", normalize_angle(self.dpsi))

    @property
    def chord(self) -> float:
        return math.hypot(self.dx, self.dy)

    @classmethod
    def from_poses(cls, start: Pose2D, goal: Pose2D,
                   kappa0: float = 0.0, kappa2: float = 0.0) -> "PathBoundaryCondition":
        dx, dy, dpsi = relative_configuration(start, goal)
        return cls(dx, dy, dpsi, kappa0, kappa2)


class VehicleLimits(BaseModel):
    """Input constraints of the kinematic bicycle model."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma_max: float = Field(GAMMA_MAX, gt=0, lt=math.pi / 2)
    omega_max: float = Field(OMEGA_MAX, gt=0)
    a_min: float = Field(A_MIN, lt=0)
    a_max: float = Field(A_MAX, gt=0)
    j_max: float = Field(J_MAX, gt=0)
    a_lat_max: float = Field(A_LAT_MAX, gt=0)
    wheelbase: float = Field(WHEELBASE, gt=0)
    v_cap: float = Field(V_CAP, gt=0)

    @model_validator(mode="after")
    def _finite(self) -> "VehicleLimits":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def kappa_max(self) -> float:
        return math.tan(self.gamma_max) / self.wheelbase


class G2Unknowns(NamedTuple):
    """Unknowns of the 8-equation matching system."""
    x1: float
    y1: float
    psi1: float
    kappa1: float
    kp0: float
    kp1: float
    kp2: float
    s1: float


class FeasibilityResult(NamedTuple):
    feasible: bool
    max_abs_curvature: float
    argmax_s: float


def end_sharpnesses(s0: float, s1, s2: float, kappa0: float, kappa1, kappa2: float, kp1):
    """
    Sharpness of the first and last clothoid from the curvature continuity
    conditions; zero when the host segment has no length.
    """
    kp0 = (kappa1 - 0.5 * kp1 * s1 - kappa0) / s0 if s0 > 0 else 0.0 * kappa1
    kp2 = (kappa2 - kappa1 - 0.5 * kp1 * s1) / s2 if s2 > 0 else 0.0 * kappa1
    return kp0, kp2


def _mid_pose(s0, s1, kappa0, kappa1, kp0, kp1) -> Tuple[float, float, float]:
    psi1 = kappa0 * s0 + 0.5 * kp0 * s0 * s0 + 0.5 * kappa1 * s1 - 0.125 * kp1 * s1 * s1
    cos_part, sin_part = fresnel_cs_batch(
        [kp0 * s0 * s0, 0.25 * kp1 * s1 * s1],
        [kappa0 * s0, -0.5 * kappa1 * s1],
        [0.0, psi1],
    )
    x1 = s0 * cos_part[0] + 0.5 * s1 * cos_part[1]
    y1 = s0 * sin_part[0] + 0.5 * s1 * sin_part[1]
    return float(x1), float(y1), float(psi1)


@dataclass(frozen=True)
class ThreeClothoidPath:
    """
    Solved G2 path made of three clothoids.

    `mid` is the pose at the middle of the second clothoid, expressed in the
    start frame; `origin` places the whole path in the workspace.
    """
    s0: float
    s1: float
    s2: float
    kappa0: float
    kappa1: float
    kappa2: float
    kp0: float
    kp1: float
    kp2: float
    mid: Pose2D
    origin: Pose2D = field(default_factory=lambda: Pose2D(0.0, 0.0, 0.0))

    @classmethod
    def from_parameters(cls, origin: Pose2D, s0: float, s1: float, s2: float,
                        kappa0: float, kappa1: float, kappa2: float,
                        kp1: float) -> "ThreeClothoidPath":
        """Rebuild a path from the transmitted parameters; kp0 and kp2 are derived."""
        values = (s0, s1, s2, kappa0, kappa1, kappa2, kp1)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgument("path parameters must be finite")
        if min(s0, s1, s2) < 0:
            raise InvalidArgument(f"segment lengths must be >= 0, got ({s0}, {s1}, {s2})")
        kp0, kp2 = end_sharpnesses(s0, s1, s2, kappa0, kappa1, kappa2, kp1)
        mid = Pose2D(*_mid_pose(s0, s1, kappa0, kappa1, kp0, kp1))
        return cls(s0, s1, s2, kappa0, kappa1, kappa2, float(kp0), kp1, float(kp2), mid, origin)

    @property
    def s_f(self) -> float:
        return self.s0 + self.s1 + self.s2

    @property
    def lengths(self) -> Tuple[float, float, float]:
        return (self.s0, self.s1, self.s2)

    @property
    def breakpoints(self) -> Tuple[float, float]:
        return (self.s0, self.s0 + self.s1)

    @property
    def offsets(self) -> Tuple[float, float, float]:
        return (0.0, self.s0, self.s0 + self.s1)

    @cached_property
    def segments(self) -> Tuple[ClothoidSegment, ClothoidSegment, ClothoidSegment]:
        first = ClothoidSegment(self.origin, self.kappa0, self.kp0, self.s0)
        second = ClothoidSegment(first.end, self.kappa1 - 0.5 * self.kp1 * self.s1, self.kp1, self.s1)
        third = ClothoidSegment(second.end, self.kappa2 - self.kp2 * self.s2, self.kp2, self.s2)
        return (first, second, third)

    @property
    def end(self) -> Pose2D:
        return self.segments[2].end


def relative_configuration(start: Pose2D, goal: Pose2D) -> Tuple[float, float, float]:
    """Goal pose expressed in the frame of the start pose."""
    ex, ey = goal.x - start.x, goal.y - start.y
    c, s = math.cos(start.psi), math.sin(start.psi)
    return c * ex + s * ey, -s * ex + c * ey, normalize_angle(goal.psi - start.psi)


# Evaluation along a path

def _checked_path_arclength(path: ThreeClothoidPath, s: ArrayLike) -> NDArray:
    s = np.asarray(s, dtype=float)
    slack = _DOMAIN_SLACK * max(1.0, path.s_f)
    if np.any(~np.isfinite(s)) or np.any(s < -slack) or np.any(s > path.s_f + slack):
        raise OutOfRange(f"arclength outside [0, {path.s_f}]")
    return np.clip(s, 0.0, path.s_f)


def segment_index(path: ThreeClothoidPath, s: ArrayLike) -> NDArray:
    """Index of the segment owning each arclength; breakpoints belong to the later segment."""
    return np.searchsorted(np.asarray(path.breakpoints), s, side="right")


def curvature_at(path: ThreeClothoidPath, s):
    """Piecewise-linear curvature; exact kappa0 at 0 and kappa2 at s_f."""
    s = _checked_path_arclength(path, s)
    idx = segment_index(path, s)
    first = path.kappa0 + path.kp0 * s
    middle = path.kappa1 + path.kp1 * (s - (path.s0 + 0.5 * path.s1))
    last = path.kappa2 - path.kp2 * (path.s_f - s)
    result = np.choose(idx, (first, middle, last))
    return float(result) if result.ndim == 0 else result


def sharpness_at(path: ThreeClothoidPath, s):
    """Right-continuous sharpness (left limit at s_f)."""
    s = _checked_path_arclength(path, s)
    idx = segment_index(path, s)
    result = np.choose(idx, (path.kp0, path.kp1, path.kp2)).astype(float)
    return float(result) if result.ndim == 0 else result


def path_poses(path: ThreeClothoidPath, s: ArrayLike) -> Tuple[NDArray, NDArray, NDArray]:
    """World-frame x, y and unwrapped heading at sorted or unsorted arclengths."""
    s = np.atleast_1d(_checked_path_arclength(path, s))
    idx = segment_index(path, s)
    x = np.empty_like(s)
    y = np.empty_like(s)
    psi = np.empty_like(s)
    for k, (seg, offset) in enumerate(zip(path.segments, path.offsets)):
        mask = idx == k
        if np.any(mask):
            x[mask], y[mask], psi[mask] = poses_at(seg, s[mask] - offset)
    return x, y, psi


def sample_grid(path: ThreeClothoidPath, ds: float) -> NDArray:
    """0, ds, 2ds, ... plus both breakpoints and s_f, strictly increasing."""
    if not (math.isfinite(ds) and ds > 0):
        raise InvalidArgument(f"sampling step must be positive, got {ds}")
    grid = np.arange(0.0, path.s_f, ds)
    exact = np.array([0.0, path.s0, path.s0 + path.s1, path.s_f])
    near = np.min(np.abs(grid[:, None] - exact[None, :]), axis=1) <= 1e-9
    return np.unique(np.concatenate((grid[~near], exact)))


def sample_path(path: ThreeClothoidPath, ds: float) -> pd.DataFrame:
    """
    Sample the path at arclength step `ds`.

    Returns:
        DataFrame with columns s, x, y, psi (normalized), kappa
    """
    s = sample_grid(path, ds)
    x, y, psi = path_poses(path, s)
    return pd.DataFrame({
        "s": s,
        "x": x,
        "y": y,
        "psi": normalize_angle(psi),
        "kappa": curvature_at(path, s),
    })


# The 8-equation system

def residuals(bc: PathBoundaryCondition, s0: float, s2: float, unknowns: G2Unknowns) -> NDArray:
    """
    Left-minus-right of the eight matching equations at the midpoint of the
    second clothoid: position and heading reached from the start, position
    and heading reached backwards from the goal, and both curvature
    continuity conditions.
    """
    x1, y1, psi1, kappa1, kp0, kp1, kp2, s1 = unknowns
    if not (s0 > 0 and s2 > 0 and s1 > 0):
        raise InvalidArgument(f"segment lengths must be positive, got ({s0}, {s1}, {s2})")
    k0, k2, dpsi = bc.kappa0, bc.kappa2, bc.dpsi
    cos_part, sin_part = fresnel_cs_batch(
        [kp0 * s0 * s0, 0.25 * kp1 * s1 * s1, 0.25 * kp1 * s1 * s1, kp2 * s2 * s2],
        [k0 * s0, -0.5 * kappa1 * s1, 0.5 * kappa1 * s1, -k2 * s2],
        [0.0, psi1, psi1, dpsi],
    )
    half = 0.5 * s1
    return np.array([
        x1 - (s0 * cos_part[0] + half * cos_part[1]),
        y1 - (s0 * sin_part[0] + half * sin_part[1]),
        x1 - (bc.dx - s2 * cos_part[3] - half * cos_part[2]),
        y1 - (bc.dy - s2 * sin_part[3] - half * sin_part[2]),
        psi1 - (k0 * s0 + 0.5 * kp0 * s0 * s0 + 0.5 * kappa1 * s1 - 0.125 * kp1 * s1 * s1),
        psi1 + 0.5 * kappa1 * s1 + 0.125 * kp1 * s1 * s1 - (dpsi - k2 * s2 + 0.5 * kp2 * s2 * s2),
        kappa1 - 0.5 * kp1 * s1 - (k0 + kp0 * s0),
        kappa1 + 0.5 * kp1 * s1 - (k2 - kp2 * s2),
    ])


def scaled_residuals(path: ThreeClothoidPath, bc: PathBoundaryCondition) -> NDArray:
    """Residuals of a solved path with lengths measured in chord units."""
    chord = bc.chord
    scaled_bc = PathBoundaryCondition(
        bc.dx / chord, bc.dy / chord, bc.dpsi, bc.kappa0 * chord, bc.kappa2 * chord
    )
    unknowns = G2Unknowns(
        path.mid.x / chord, path.mid.y / chord, path.mid.psi,
        path.kappa1 * chord, path.kp0 * chord ** 2, path.kp1 * chord ** 2,
        path.kp2 * chord ** 2, path.s1 / chord,
    )
    res = residuals(scaled_bc, path.s0 / chord, path.s2 / chord, unknowns)
    # heading residuals compare unwrapped angles
    res[4] = normalize_angle(res[4])
    res[5] = normalize_angle(res[5])
    return res


@dataclass(frozen=True)
class _ReducedSystem:
    """Two-equation system in (s1, kp1), everything scaled by the chord."""
    dx: float
    dy: float
    dpsi: float
    kappa0: float
    kappa2: float
    s0: float
    s2: float

    def terms(self, s1: NDArray, kp1: NDArray):
        s0, s2, k0, k2 = self.s0, self.s2, self.kappa0, self.kappa2
        kappa1 = (self.dpsi - 0.5 * (k0 * s0 + k2 * s2) + 0.25 * kp1 * s1 * (s0 - s2)) \
            / (s1 + 0.5 * (s0 + s2))
        kp0, kp2 = end_sharpnesses(s0, s1, s2, k0, kappa1, k2, kp1)
        psi1 = k0 * s0 + 0.5 * kp0 * s0 * s0 + 0.5 * kappa1 * s1 - 0.125 * kp1 * s1 * s1
        return kappa1, kp0, kp2, psi1

    def __call__(self, points: NDArray) -> NDArray:
        s1, kp1 = points[:, 0], points[:, 1]
        s0, s2 = self.s0, self.s2
        kappa1, kp0, kp2, psi1 = self.terms(s1, kp1)
        ones = np.ones_like(s1)
        quarter = 0.25 * kp1 * s1 * s1
        cos_part, sin_part = fresnel_cs_batch(
            np.stack([kp0 * s0 * s0, quarter, quarter, kp2 * s2 * s2], axis=1),
            np.stack([self.kappa0 * s0 * ones, -0.5 * kappa1 * s1, 0.5 * kappa1 * s1,
                      -self.kappa2 * s2 * ones], axis=1),
            np.stack([0.0 * ones, psi1, psi1, self.dpsi * ones], axis=1),
        )
        half = 0.5 * s1
        f1 = s0 * cos_part[:, 0] + half * (cos_part[:, 1] + cos_part[:, 2]) + s2 * cos_part[:, 3] - self.dx
        f2 = s0 * sin_part[:, 0] + half * (sin_part[:, 1] + sin_part[:, 2]) + s2 * sin_part[:, 3] - self.dy
        return np.stack([f1, f2], axis=1)


def _newton(system: _ReducedSystem, start: NDArray) -> Optional[NDArray]:
    """Damped Newton with a central-difference Jacobian; None on failure."""
    v = np.array(start, dtype=float)
    for iteration in range(NEWTON_MAX_ITER + 1):
        h = FD_REL_STEP * np.maximum(1.0, np.abs(v))
        stencil = np.array([
            v,
            v + [h[0], 0.0], v - [h[0], 0.0],
            v + [0.0, h[1]], v - [0.0, h[1]],
        ])
        values = system(stencil)
        f = values[0]
        if not np.all(np.isfinite(values)):
            return None
        norm = np.max(np.abs(f))
        if norm <= NEWTON_TOL:
            logger.debug(f"Newton converged in {iteration} iterations (|F|={norm:.2e})")
            return v
        if iteration == NEWTON_MAX_ITER:
            break
        jac = np.column_stack([
            (values[1] - values[2]) / (2 * h[0]),
            (values[3] - values[4]) / (2 * h[1]),
        ])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]

        lam = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            candidate = v + lam * step
            if candidate[0] > 0:
                trial = system(candidate[None, :])[0]
                if np.all(np.isfinite(trial)) and np.max(np.abs(trial)) < norm:
                    v = candidate
                    break
            lam *= 0.5
        else:
            logger.debug(f"Newton step damping exhausted at iteration {iteration}")
            return None
    return None


def _seeds(system: _ReducedSystem, chord: float, kappa_max: float,
           warm: Optional[Tuple[float, float]]) -> List[Tuple[float, float]]:
    seeds: List[Tuple[float, float]] = []
    if warm is not None:
        seeds.append((warm[0] / chord, warm[1] * chord * chord))
    seeds.append((max(1.0 - system.s0 - system.s2, SEED_S1_MIN_FRACTION), 0.0))
    sharp = kappa_max * chord
    for factor, kp1 in product(SEED_S1_FACTORS, (0.0, sharp, -sharp)):
        if (factor, kp1) not in seeds:
            seeds.append((factor, kp1))
    return seeds


def solve_g2(bc: PathBoundaryCondition, s0: float, s2: float, *,
             origin: Optional[Pose2D] = None,
             limits: Optional[VehicleLimits] = None,
             seed: Optional[Tuple[float, float]] = None) -> ThreeClothoidPath:
    """
    Solve the G2 Hermite problem with three clothoids for fixed s0 and s2.

    Args:
        bc: goal configuration relative to the start pose
        s0: length of the first clothoid
        s2: length of the last clothoid
        origin: workspace pose of the start, defaults to the origin
        limits: vehicle limits, only used to scale the multi-start seeds
        seed: optional (s1, kp1) warm start from a neighbouring solution

    Returns:
        The solved path

    Raises:
        DegenerateChord: start and goal coincide
        NoConvergence: every seed failed
    """
    if not (math.isfinite(s0) and math.isfinite(s2) and s0 > 0 and s2 > 0):
        raise InvalidArgument(f"s0 and s2 must be positive, got ({s0}, {s2})")
    chord = bc.chord
    if chord < CHORD_MIN:
        raise DegenerateChord(
            f"start and goal coincide (chord {chord:.3g} m, dpsi {bc.dpsi:.6g} rad)"
        )
    origin = origin or Pose2D(0.0, 0.0, 0.0)
    kappa_max = (limits or VehicleLimits()).kappa_max

    system = _ReducedSystem(
        bc.dx / chord, bc.dy / chord, bc.dpsi,
        bc.kappa0 * chord, bc.kappa2 * chord, s0 / chord, s2 / chord,
    )
    for start in _seeds(system, chord, kappa_max, seed):
        solution = _newton(system, np.array(start))
        if solution is None:
            continue
        s1_scaled, kp1_scaled = solution
        kappa1_scaled = system.terms(s1_scaled, kp1_scaled)[0]
        path = ThreeClothoidPath.from_parameters(
            origin, s0, float(s1_scaled * chord), s2,
            bc.kappa0, float(kappa1_scaled / chord), bc.kappa2,
            float(kp1_scaled / chord ** 2),
        )
        check = np.max(np.abs(scaled_residuals(path, bc)))
        if check <= RESIDUAL_CHECK_TOL:
            logger.debug(f"solved bc={bc} from seed {start}: s1={path.s1:.6g}, kp1={path.kp1:.6g}")
            return path
        logger.debug(f"seed {start} converged but residual check failed ({check:.2e})")

    raise NoConvergence(
        f"no convergence for dx={bc.dx:.6g} dy={bc.dy:.6g} dpsi={bc.dpsi:.6g} s0={s0:.6g} s2={s2:.6g}"
    )


# Feasibility

def check_feasible(path: ThreeClothoidPath, limits: VehicleLimits) -> FeasibilityResult:
    """Exact maximum of |kappa| over the path, taken at the breakpoints."""
    points = np.array([0.0, path.s0, path.s0 + path.s1, path.s_f])
    values = np.abs([
        path.kappa0,
        path.kappa1 - 0.5 * path.kp1 * path.s1,
        path.kappa1 + 0.5 * path.kp1 * path.s1,
        path.kappa2,
    ])
    k = int(np.argmax(values))
    peak = float(values[k])
    return FeasibilityResult(peak <= limits.kappa_max, peak, float(points[k]))


class ChartWindow(NamedTuple):
    dx_min: float
    dx_max: float
    dy_min: float
    dy_max: float


@dataclass(frozen=True)
class _ChartTask:
    dpsi: float
    kappa0: float
    s0: float
    limits: VehicleLimits
    xs: NDArray
    ys: NDArray
    xtol: float


class _RayFailure(Exception):
    pass


def _margin(task: _ChartTask, dx: float, dy: float,
            seed: Optional[Tuple[float, float]]) -> Tuple[float, Optional[Tuple[float, float]]]:
    """max|kappa| - kappa_max for one goal, or nan when no path exists."""
    try:
        path = solve_g2(PathBoundaryCondition(dx, dy, task.dpsi, task.kappa0, 0.0),
                        task.s0, task.s0, limits=task.limits, seed=seed)
    except (NoConvergence, DegenerateChord):
        return math.nan, None
    peak = check_feasible(path, task.limits).max_abs_curvature
    return peak - task.limits.kappa_max, (path.s1, path.kp1)


def _scan_row(task: _ChartTask, row: int) -> NDArray:
    dy = task.ys[row]
    margins = np.full(task.xs.size, math.nan)
    seed = None
    for i, dx in enumerate(task.xs):
        margins[i], found = _margin(task, dx, dy, seed)
        seed = found or seed
    return margins


def _refine_ray(task: _ChartTask, ray: int, line: NDArray) -> List[Tuple[float, float, int]]:
    """Bisect every sign change of the margin along one grid line."""
    along_rows = ray < task.ys.size
    coords = task.xs if along_rows else task.ys
    fixed = task.ys[ray] if along_rows else task.xs[ray - task.ys.size]
    points = []
    for i in range(coords.size - 1):
        left, right = line[i], line[i + 1]
        if not (np.isfinite(left) and np.isfinite(right)) or (left > 0) == (right > 0):
            continue
        seed = [None]

        def g(t: float) -> float:
            dx, dy = (t, fixed) if along_rows else (fixed, t)
            value, found = _margin(task, dx, dy, seed[0])
            if not math.isfinite(value):
                raise _RayFailure()
            seed[0] = found
            return value

        try:
            root = bisect(g, coords[i], coords[i + 1], xtol=task.xtol)
            residual = g(root)
        except (_RayFailure, ValueError, RuntimeError):
            continue
        if abs(residual) <= BOUNDARY_ACCEPT_TOL:
            points.append((root, fixed, ray) if along_rows else (fixed, root, ray))
        else:
            logger.debug(f"ray {ray}: dropped branch jump near {root:.4g} (margin {residual:.2e})")
    return points


@dataclass
class FeasibilityChart:
    """Curvature margin on a grid of goals plus the traced feasibility boundary."""
    dpsi: float
    kappa0: float
    s0: float
    resolution: float
    xs: NDArray
    ys: NDArray
    margin: NDArray
    boundary: pd.DataFrame

    @property
    def feasible(self) -> NDArray:
        return np.nan_to_num(self.margin, nan=math.inf) <= 0

    def to_frame(self) -> pd.DataFrame:
        """Rows of (dx, dy, side) for the boundary and every grid sample."""
        gx, gy = np.meshgrid(self.xs, self.ys)
        samples = pd.DataFrame({
            "dx": gx.ravel(),
            "dy": gy.ravel(),
            "side": np.where(self.feasible.ravel(), "feasible_sample", "infeasible_sample"),
        })
        boundary = self.boundary[["dx", "dy"]].assign(side="boundary")
        return pd.concat([boundary, samples], ignore_index=True)[CHART_COLUMNS]


def _grid(low: float, high: float, step: float) -> NDArray:
    count = int(math.floor((high - low) / step + 1e-9)) + 1
    return low + step * np.arange(count)


def _run(workers: int, fn, *iterables) -> list:
    if workers <= 1:
        return list(map(fn, *iterables))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *iterables))


def feasibility_boundary(dpsi: float, kappa0: float, s0: float, window: ChartWindow,
                         resolution: float, limits: Optional[VehicleLimits] = None,
                         workers: int = 1) -> FeasibilityChart:
    """
    Trace where max|kappa| equals kappa_max over a window of goals, with
    s2 = s0 and kappa2 = 0.

    The grid is solved once row by row; every sign change of the margin along
    a row (constant dy) or a column (constant dx) is refined by bisection.
    Rays without a sign change contribute nothing.

    Args:
        dpsi: goal heading change
        kappa0: initial curvature
        s0: length of the first and last clothoid
        window: goal window (dx and dy ranges)
        resolution: grid spacing in metres
        limits: vehicle limits
        workers: process count; 1 runs in-process

    Returns:
        FeasibilityChart with the grid margins and boundary points
    """
    if not (math.isfinite(resolution) and resolution > 0):
        raise InvalidArgument(f"resolution must be positive, got {resolution}")
    if window.dx_max < window.dx_min or window.dy_max < window.dy_min:
        raise InvalidArgument(f"empty chart window {window}")
    limits = limits or VehicleLimits()
    xs = _grid(window.dx_min, window.dx_max, resolution)
    ys = _grid(window.dy_min, window.dy_max, resolution)
    xtol = min(BOUNDARY_XTOL_FACTOR * resolution, BOUNDARY_BISECT_XTOL)
    task = _ChartTask(normalize_angle(dpsi), kappa0, s0, limits, xs, ys, xtol)

    logger.info(f"feasibility chart: {xs.size}x{ys.size} grid, {workers} worker(s)")
    rows = _run(workers, _scan_row, [task] * ys.size, range(ys.size))
    margin = np.vstack(rows) if rows else np.empty((0, xs.size))

    lines = [margin[j, :] for j in range(ys.size)] + [margin[:, i] for i in range(xs.size)]
    rays = range(len(lines))
    found = _run(workers, _refine_ray, [task] * len(lines), rays, lines)

    records = [point for ray_points in found for point in ray_points]
    boundary = pd.DataFrame(records, columns=["dx", "dy", "ray"])
    logger.info(f"feasibility chart: {len(boundary)} boundary points")
    return FeasibilityChart(task.dpsi, kappa0, s0, resolution, xs, ys, margin, boundary)


def is_feasible_goal(dx: float, dy: float, dpsi: float, kappa0: float, s0: float,
                     limits: Optional[VehicleLimits] = None) -> bool:
    """Classify one goal of a chart: solvable and within the curvature bound."""
    limits = limits or VehicleLimits()
    task = _ChartTask(normalize_angle(dpsi), kappa0, s0, limits, np.empty(0), np.empty(0), 0.0)
    value, _ = _margin(task, dx, dy, None)
    return math.isfinite(value) and value <= 0


def solve_tunable_grid(bc: PathBoundaryCondition, s0_values: Iterable[float],
                       s2_values: Sequence[float], *, origin: Optional[Pose2D] = None,
                       limits: Optional[VehicleLimits] = None) -> List[ThreeClothoidPath]:
    """Solve every (s0, s2) pair, warm-starting from the previous solution."""
    paths = []
    seed = None
    for s0, s2 in product(s0_values, s2_values):
        try:
            path = solve_g2(bc, s0, s2, origin=origin, limits=limits, seed=seed)
        except NoConvergence as e:
            logger.debug(f"tunable ({s0}, {s2}) skipped: {e}")
            continue
        seed = (path.s1, path.kp1)
        paths.append(path)
    return paths
