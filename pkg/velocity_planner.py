"""
Velocity planning along a three-clothoid path: speed bound, piecewise
constant acceleration plan and constant-jerk smoothing
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from config import (
    ACCEL_GRID_STEP, ACCEL_REFINE_TOL, CASE_GG, CASE_GL, CASE_LG, CASE_LL,
    CASE_NAMES, TIME_EPSABS, VELOCITY_COLUMNS
)
from exceptions import (
    InfeasibleStart, InvalidArgument, OutOfRange, SmoothingOverrun, StoppedFlow
)
from path_planner import ThreeClothoidPath, VehicleLimits, curvature_at, sharpness_at

logger = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-12
_RAMP_SCAN_POINTS = 201


class VelocityBound:
    """
    Pointwise speed bound from the lateral acceleration and steering rate
    limits, capped at limits.v_cap.
    """

    def __init__(self, path: ThreeClothoidPath, limits: VehicleLimits):
        self.path = path
        self.limits = limits

    def _lateral(self, kappa: NDArray) -> NDArray:
        kappa = np.abs(kappa)
        with np.errstate(divide="ignore"):
            return np.where(kappa > 0, np.sqrt(self.limits.a_lat_max / kappa), np.inf)

    def _steering(self, kappa: NDArray, sharpness: NDArray) -> NDArray:
        l = self.limits.wheelbase
        sharpness = np.abs(sharpness)
        with np.errstate(divide="ignore"):
            return np.where(
                sharpness > 0,
                self.limits.omega_max * (1 + l * l * kappa * kappa) / (l * sharpness),
                np.inf,
            )

    def _combine(self, kappa: NDArray, sharpness: NDArray) -> NDArray:
        return np.minimum(
            np.minimum(self._lateral(kappa), self._steering(kappa, sharpness)),
            self.limits.v_cap,
        )

    def lateral(self, s):
        return self._lateral(np.asarray(curvature_at(self.path, s)))

    def steering(self, s):
        return self._steering(np.asarray(curvature_at(self.path, s)),
                              np.asarray(sharpness_at(self.path, s)))

    def __call__(self, s):
        value = self._combine(np.asarray(curvature_at(self.path, s)),
                              np.asarray(sharpness_at(self.path, s)))
        return float(value) if np.ndim(value) == 0 else value

    def on_segment(self, k: int, sigma: ArrayLike) -> NDArray:
        """Bound on segment k at local arclength sigma, using that segment's sharpness."""
        seg = self.path.segments[k]
        sigma = np.asarray(sigma, dtype=float)
        return self._combine(seg.curvature(sigma), np.full(sigma.shape, seg.sharpness))


def vbar(path: ThreeClothoidPath, limits: VehicleLimits, s):
    return VelocityBound(path, limits)(s)


class PieceTable(NamedTuple):
    """Speed profile pieces; on piece k, a = accel + jerk_s*u and v^2 = anchor + 2*accel*u + jerk_s*u^2."""
    start: NDArray
    end: NDArray
    anchor: NDArray
    accel: NDArray
    jerk_s: NDArray


def _pieces(rows) -> PieceTable:
    return PieceTable(*(np.array(col, dtype=float) for col in zip(*rows)))


@dataclass(frozen=True)
class ConstantAccelPlan:
    """One constant acceleration per segment, chained at the junctions."""
    a0: float
    a1: float
    a2: float
    v0: float
    v1: float
    v2: float
    vf: float
    s0: float
    s1: float
    s2: float

    @property
    def s_f(self) -> float:
        return self.s0 + self.s1 + self.s2

    @cached_property
    def pieces(self) -> PieceTable:
        s0, s1 = self.s0, self.s1
        return _pieces([
            (0.0, s0, self.v0 ** 2, self.a0, 0.0),
            (s0, s0 + s1, self.v1 ** 2, self.a1, 0.0),
            (s0 + s1, self.s_f, self.v2 ** 2, self.a2, 0.0),
        ])


def smoothing_hosts(case_tag: int, s0: float, s1: float, s2: float,
                    smooth_a: float) -> Tuple[float, float]:
    """Lengths available to the ramp at s0 and the ramp at s0+s1."""
    if case_tag == CASE_LL:
        return s1, s2
    if case_tag == CASE_GG:
        return s0, s1
    if case_tag == CASE_LG:
        return s1, s1 - smooth_a
    return s0, s2


@dataclass(frozen=True)
class SmoothedVelocityPlan:
    """
    Velocity plan with linear acceleration ramps at the segment junctions.

    `case_tag` encodes (a0 <= a1, a1 <= a2) as LL=0, GG=1, LG=2, GL=3.
    `smooth_a` is the ramp at s0 and `smooth_b` the ramp at s0+s1; a ramp sits
    at the end of the earlier segment when the acceleration drops and at the
    start of the later one otherwise. `v_aux1`/`v_aux2` are the case-specific
    anchor speeds (see `pieces`).
    """
    case_tag: int
    v0: float
    v_aux1: float
    v_aux2: float
    a0: float
    a1: float
    a2: float
    jc: float
    s0: float
    s1: float
    s2: float
    smooth_a: float
    smooth_b: float

    def __post_init__(self):
        if self.case_tag not in CASE_NAMES:
            raise InvalidArgument(f"unknown velocity case {self.case_tag}")
        values = (self.v0, self.v_aux1, self.v_aux2, self.a0, self.a1, self.a2, self.jc,
                  self.s0, self.s1, self.s2, self.smooth_a, self.smooth_b)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgument("velocity plan fields must be finite")
        if min(self.v0, self.v_aux1, self.v_aux2) < 0:
            raise InvalidArgument("speeds must be non-negative")
        if self.smooth_a < 0 or self.smooth_b < 0:
            raise InvalidArgument("smoothing distances must be non-negative")
        host_a, host_b = self.hosts
        slack = 1e-9 * max(1.0, self.s_f)
        if self.smooth_a > host_a + slack:
            raise InvalidArgument(f"smooth_a {self.smooth_a} exceeds its host length {host_a}")
        if self.smooth_b > host_b + slack:
            raise InvalidArgument(f"smooth_b {self.smooth_b} exceeds its host length {host_b}")

    @property
    def case_name(self) -> str:
        return CASE_NAMES[self.case_tag]

    @property
    def s_f(self) -> float:
        return self.s0 + self.s1 + self.s2

    @property
    def hosts(self) -> Tuple[float, float]:
        return smoothing_hosts(self.case_tag, self.s0, self.s1, self.s2, self.smooth_a)

    @cached_property
    def pieces(self) -> PieceTable:
        s0, s1, sf = self.s0, self.s1, self.s_f
        sa, sb = self.smooth_a, self.smooth_b
        a0, a1, a2 = self.a0, self.a1, self.a2
        ca = (a1 - a0) / sa if sa > 0 else 0.0
        cb = (a2 - a1) / sb if sb > 0 else 0.0
        v0sq, w1, w2 = self.v0 ** 2, self.v_aux1 ** 2, self.v_aux2 ** 2
        tag = self.case_tag
        if tag == CASE_LL:
            rows = [
                (0.0, s0, v0sq, a0, 0.0),
                (s0, s0 + sa, w1, a0, ca),
                (s0 + sa, s0 + s1, w1 + (a0 + a1) * sa, a1, 0.0),
                (s0 + s1, s0 + s1 + sb, w2, a1, cb),
                (s0 + s1 + sb, sf, w2 + (a1 + a2) * sb, a2, 0.0),
            ]
        elif tag == CASE_GG:
            rows = [
                (0.0, s0 - sa, v0sq, a0, 0.0),
                (s0 - sa, s0, v0sq + 2 * a0 * (s0 - sa), a0, ca),
                (s0, s0 + s1 - sb, w1, a1, 0.0),
                (s0 + s1 - sb, s0 + s1, w1 + 2 * a1 * (s1 - sb), a1, cb),
                (s0 + s1, sf, w2, a2, 0.0),
            ]
        elif tag == CASE_LG:
            rows = [
                (0.0, s0, v0sq, a0, 0.0),
                (s0, s0 + sa, w1, a0, ca),
                (s0 + sa, s0 + s1 - sb, w1 + (a0 + a1) * sa, a1, 0.0),
                (s0 + s1 - sb, s0 + s1, w2, a1, cb),
                (s0 + s1, sf, w2 + (a1 + a2) * sb, a2, 0.0),
            ]
        else:
            rows = [
                (0.0, s0 - sa, v0sq, a0, 0.0),
                (s0 - sa, s0, v0sq + 2 * a0 * (s0 - sa), a0, ca),
                (s0, s0 + s1, w1, a1, 0.0),
                (s0 + s1, s0 + s1 + sb, w2, a1, cb),
                (s0 + s1 + sb, sf, w2 + (a1 + a2) * sb, a2, 0.0),
            ]
        return _pieces(rows)


@dataclass(frozen=True)
class MotionPlan:
    """A path together with the smoothed speed plan along it."""
    path: ThreeClothoidPath
    velocity: SmoothedVelocityPlan


# Evaluation

def _locate(plan, s) -> Tuple[NDArray, NDArray, NDArray]:
    s = np.asarray(s, dtype=float)
    slack = _DOMAIN_SLACK * max(1.0, plan.s_f)
    if np.any(~np.isfinite(s)) or np.any(s < -slack) or np.any(s > plan.s_f + slack):
        raise OutOfRange(f"arclength outside [0, {plan.s_f}]")
    s = np.clip(s, 0.0, plan.s_f)
    table = plan.pieces
    idx = np.clip(np.searchsorted(table.start, s, side="right") - 1, 0, table.start.size - 1)
    return s, idx, s - table.start[idx]


def velocity_at(plan, s):
    """Speed on the active piece (pieces are closed on the left)."""
    _, idx, u = _locate(plan, s)
    t = plan.pieces
    v = np.sqrt(np.maximum(t.anchor[idx] + 2 * t.accel[idx] * u + t.jerk_s[idx] * u * u, 0.0))
    return float(v) if v.ndim == 0 else v


def acceleration_at(plan, s):
    _, idx, u = _locate(plan, s)
    t = plan.pieces
    a = t.accel[idx] + t.jerk_s[idx] * u
    return float(a) if a.ndim == 0 else a


def _speed_sq(t: PieceTable, k: int, u):
    return t.anchor[k] + 2 * t.accel[k] * u + t.jerk_s[k] * u * u


def _piece_duration(t: PieceTable, k: int, u: float) -> float:
    """Time spent on piece k between its start and local arclength u."""
    if u <= 0:
        return 0.0
    candidates = [u]
    if t.start[k] > 0:
        candidates.append(0.0)
    if t.jerk_s[k] != 0:
        vertex = -t.accel[k] / t.jerk_s[k]
        if 0 < vertex < u:
            candidates.append(vertex)
    if min(_speed_sq(t, k, c) for c in candidates) <= 0:
        raise StoppedFlow(f"speed reaches zero near s={t.start[k] + u:.6g} m")

    if t.jerk_s[k] == 0:
        v_start = math.sqrt(max(t.anchor[k], 0.0))
        v_end = math.sqrt(_speed_sq(t, k, u))
        return 2 * u / (v_start + v_end)
    value, _ = quad(lambda x: 1.0 / math.sqrt(_speed_sq(t, k, x)), 0.0, u,
                    epsabs=TIME_EPSABS, epsrel=0.0, limit=200)
    return value


def times_at(plan, s: ArrayLike) -> NDArray:
    """Travel time to every arclength in `s`."""
    s_arr, idx, u = _locate(plan, np.atleast_1d(s))
    t = plan.pieces
    boundary = np.concatenate(([0.0], np.cumsum([
        _piece_duration(t, k, t.end[k] - t.start[k]) if np.any(idx > k) else 0.0
        for k in range(t.start.size - 1)
    ])))
    return np.array([boundary[k] + _piece_duration(t, k, uk) for k, uk in zip(idx, u)])


def time_at(plan, s: float) -> float:
    """Travel time to arclength `s`, integrating ds / v."""
    return float(times_at(plan, [s])[0])


def total_time(plan) -> float:
    return time_at(plan, plan.s_f)


# Constant acceleration plan

def _best_acceleration(bound: VelocityBound, k: int, v_start: float, length: float,
                       limits: VehicleLimits) -> float:
    """Largest acceleration that keeps sqrt(v^2 + 2 a s) under the bound on segment k."""
    if length <= 0:
        return limits.a_max
    grid = np.arange(ACCEL_GRID_STEP, length, ACCEL_GRID_STEP)
    grid = np.append(grid[grid < length], length)

    def ratio(sigma):
        return (bound.on_segment(k, sigma) ** 2 - v_start ** 2) / (2 * sigma)

    values = ratio(grid)
    j = int(np.argmin(values))
    best = float(values[j])
    lower = grid[j - 1] if j > 0 else 0.5 * grid[0]
    upper = grid[j + 1] if j + 1 < grid.size else grid[j]
    if upper > lower:
        refined = minimize_scalar(lambda x: float(ratio(x)), bounds=(lower, upper),
                                  method="bounded", options={"xatol": ACCEL_REFINE_TOL})
        best = min(best, float(refined.fun))
    if k < 2:
        right = float(bound.on_segment(k + 1, 0.0))
        best = min(best, (right ** 2 - v_start ** 2) / (2 * length))

    if best < limits.a_min:
        logger.warning(
            f"segment {k}: required deceleration {best:.3f} m/s^2 is below a_min={limits.a_min}; "
            "the speed bound will be exceeded"
        )
    return min(limits.a_max, max(limits.a_min, best))


def constant_accel_plan(path: ThreeClothoidPath, v0: float, limits: VehicleLimits) -> ConstantAccelPlan:
    """
    Pick the highest admissible acceleration on each segment in turn.

    Raises:
        InfeasibleStart: v0 already exceeds the speed bound at s = 0
    """
    if not (math.isfinite(v0) and v0 >= 0):
        raise InvalidArgument(f"initial speed must be a non-negative number, got {v0}")
    bound = VelocityBound(path, limits)
    start_bound = float(bound.on_segment(0, 0.0))
    if v0 > start_bound + 1e-12:
        raise InfeasibleStart(f"v0={v0:.6g} m/s exceeds the speed bound {start_bound:.6g} m/s at s=0")

    speeds = [v0]
    accels = []
    for k, length in enumerate(path.lengths):
        a = _best_acceleration(bound, k, speeds[-1], length, limits)
        accels.append(a)
        speeds.append(math.sqrt(max(speeds[-1] ** 2 + 2 * a * length, 0.0)))
    logger.debug(f"constant acceleration plan: a={accels}, v={speeds}")
    return ConstantAccelPlan(*accels, *speeds, *path.lengths)


# Jerk smoothing

def _peak_speed_sq(w_start: float, a_from: float, c: float, length: float) -> float:
    values = [w_start, w_start + 2 * a_from * length + c * length * length]
    if c != 0:
        vertex = -a_from / c
        if 0 < vertex < length:
            values.append(w_start + 2 * a_from * vertex + c * vertex * vertex)
    return max(values)


def _ramp_length(junction: int, delta_a: float, a_from: float, jc: float, s_init: float,
                 start_speed_sq: Callable[[float], float], host: float) -> float:
    """
    Shortest ramp no shorter than `s_init` whose jerk (da/ds)*v stays within jc.

    Raises:
        SmoothingOverrun: no admissible ramp fits into `host`
    """
    if delta_a == 0:
        return 0.0
    s_init = max(s_init, 1e-9)

    def slack(length: float) -> float:
        peak = _peak_speed_sq(start_speed_sq(length), a_from, delta_a / length, length)
        return jc * length - abs(delta_a) * math.sqrt(max(peak, 0.0))

    if s_init > host:
        raise SmoothingOverrun(junction, s_init, host)
    if slack(s_init) >= 0:
        return s_init
    grid = np.linspace(s_init, host, _RAMP_SCAN_POINTS)
    values = [slack(x) for x in grid]
    for i in range(1, grid.size):
        if values[i] >= 0:
            root = brentq(slack, grid[i - 1], grid[i], xtol=1e-13)
            return root if slack(root) >= 0 else float(grid[i])
    raise SmoothingOverrun(junction, float("inf"), host)


def _initial_ramp(v: float, a_from: float, delta_a: float, jc: float, backward: bool) -> float:
    duration = abs(delta_a) / jc
    if backward:
        return v * duration - 0.5 * a_from * duration ** 2 + jc * duration ** 3 / 3
    return v * duration + 0.5 * a_from * duration ** 2 + jc * duration ** 3 / 6


def jerk_smooth(raw: ConstantAccelPlan, path: Optional[ThreeClothoidPath] = None,
                limits: Optional[VehicleLimits] = None,
                jc: Optional[float] = None) -> SmoothedVelocityPlan:
    """
    Replace the acceleration steps of a constant-acceleration plan by ramps
    of bounded jerk.

    Args:
        raw: constant acceleration plan
        path: path the plan belongs to (lengths must match)
        limits: vehicle limits; j_max is the default smoothing jerk
        jc: smoothing jerk override

    Returns:
        The case-tagged smoothed plan

    Raises:
        SmoothingOverrun: a ramp does not fit into its host segment
    """
    limits = limits or VehicleLimits()
    jc = limits.j_max if jc is None else jc
    if not (math.isfinite(jc) and jc > 0):
        raise InvalidArgument(f"smoothing jerk must be positive, got {jc}")
    if path is not None and path.lengths != (raw.s0, raw.s1, raw.s2):
        raise InvalidArgument("plan and path segment lengths differ")

    s0, s1, s2 = raw.s0, raw.s1, raw.s2
    a0, a1, a2 = raw.a0, raw.a1, raw.a2
    first_up, second_up = a0 <= a1, a1 <= a2
    case_tag = {
        (True, True): CASE_LL, (False, False): CASE_GG,
        (True, False): CASE_LG, (False, True): CASE_GL,
    }[(first_up, second_up)]
    v0sq = raw.v0 ** 2

    # acceleration is linear in arclength on a ramp, so v^2 over a ramp of
    # length S gains (a_from + a_to) * S; no jc * S^2 term enters the anchors
    if first_up:
        w_p1 = v0sq + 2 * a0 * s0
        sa = _ramp_length(1, a1 - a0, a0, jc,
                          _initial_ramp(math.sqrt(max(w_p1, 0.0)), a0, a1 - a0, jc, False),
                          lambda _: w_p1, s1)
        v_aux1 = math.sqrt(max(w_p1, 0.0))
        anchor_s, anchor_w = s0 + sa, v_aux1 ** 2 + (a0 + a1) * sa
    else:
        sa = _ramp_length(1, a1 - a0, a0, jc,
                          _initial_ramp(raw.v1, a0, a1 - a0, jc, True),
                          lambda length: v0sq + 2 * a0 * (s0 - length), s0)
        v_aux1 = math.sqrt(max(v0sq + 2 * a0 * s0 - (a0 - a1) * sa, 0.0))
        anchor_s, anchor_w = s0, v_aux1 ** 2

    p2 = s0 + s1
    w_p2 = anchor_w + 2 * a1 * (p2 - anchor_s)
    if second_up:
        sb = _ramp_length(2, a2 - a1, a1, jc,
                          _initial_ramp(math.sqrt(max(w_p2, 0.0)), a1, a2 - a1, jc, False),
                          lambda _: w_p2, s2)
        v_aux2 = math.sqrt(max(w_p2, 0.0))
    else:
        host = s1 - sa if first_up else s1

        def ramp_start(length: float) -> float:
            return anchor_w + 2 * a1 * (p2 - length - anchor_s)

        sb = _ramp_length(2, a2 - a1, a1, jc,
                          _initial_ramp(raw.v2, a1, a2 - a1, jc, True), ramp_start, host)
        if first_up:
            v_aux2 = math.sqrt(max(ramp_start(sb), 0.0))
        else:
            v_aux2 = math.sqrt(max(ramp_start(sb) + (a1 + a2) * sb, 0.0))

    plan = SmoothedVelocityPlan(case_tag, raw.v0, v_aux1, v_aux2, a0, a1, a2, jc,
                                s0, s1, s2, sa, sb)
    logger.debug(f"smoothed plan case {plan.case_name}: S=({sa:.4g}, {sb:.4g})")
    return plan


def plan_motion(path: ThreeClothoidPath, v0: float, limits: VehicleLimits) -> MotionPlan:
    """Constant acceleration plan followed by jerk smoothing."""
    raw = constant_accel_plan(path, v0, limits)
    return MotionPlan(path, jerk_smooth(raw, path, limits))


# Reporting

@dataclass(frozen=True)
class ConstraintReport:
    """Worst sampled value of every input constraint along a plan."""
    max_speed_excess: float
    min_acceleration: float
    max_acceleration: float
    max_jerk: float
    max_lateral_acceleration: float
    max_steering_rate: float
    limits: VehicleLimits

    @property
    def speed_ok(self) -> bool:
        return self.max_speed_excess <= 1e-9

    @property
    def acceleration_ok(self) -> bool:
        return (self.min_acceleration >= self.limits.a_min - 1e-9
                and self.max_acceleration <= self.limits.a_max + 1e-9)

    @property
    def jerk_ok(self) -> bool:
        return self.max_jerk <= self.limits.j_max + 1e-9

    @property
    def lateral_ok(self) -> bool:
        return self.max_lateral_acceleration <= self.limits.a_lat_max + 1e-6

    @property
    def steering_ok(self) -> bool:
        return self.max_steering_rate <= self.limits.omega_max + 1e-6

    @property
    def ok(self) -> bool:
        return all((self.speed_ok, self.acceleration_ok, self.jerk_ok,
                    self.lateral_ok, self.steering_ok))


def check_constraints(path: ThreeClothoidPath, plan: SmoothedVelocityPlan,
                      limits: VehicleLimits, ds: float = 0.01) -> ConstraintReport:
    """Sample a plan every `ds` metres and report the worst constraint values."""
    if not ds > 0:
        raise InvalidArgument(f"sampling step must be positive, got {ds}")
    s = np.append(np.arange(0.0, plan.s_f, ds), plan.s_f)
    v = velocity_at(plan, s)
    _, idx, _ = _locate(plan, s)
    a = acceleration_at(plan, s)
    jerk = np.abs(plan.pieces.jerk_s[idx]) * v
    kappa = np.asarray(curvature_at(path, s))
    sharp = np.asarray(sharpness_at(path, s))
    l = limits.wheelbase
    steering = l * np.abs(sharp) * v / (1 + (l * kappa) ** 2)
    return ConstraintReport(
        max_speed_excess=float(np.max(v - VelocityBound(path, limits)(s))),
        min_acceleration=float(np.min(a)),
        max_acceleration=float(np.max(a)),
        max_jerk=float(np.max(jerk)),
        max_lateral_acceleration=float(np.max(np.abs(kappa) * v * v)),
        max_steering_rate=float(np.max(steering)),
        limits=limits,
    )


def velocity_profile(plan, ds: float) -> pd.DataFrame:
    """Columns s, v, a, t every `ds` metres (s_f included)."""
    if not ds > 0:
        raise InvalidArgument(f"sampling step must be positive, got {ds}")
    s = np.append(np.arange(0.0, plan.s_f, ds), plan.s_f)
    s = np.unique(s)
    return pd.DataFrame({
        "s": s,
        "v": velocity_at(plan, s),
        "a": acceleration_at(plan, s),
        "t": times_at(plan, s),
    })[VELOCITY_COLUMNS]
