"""
Conflict checking between shared plans: clothoid intersections, arrival
time gaps and swept-volume boundaries
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import shapely
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.ndimage import minimum_filter
from scipy.optimize import brentq
from shapely.geometry import Polygon
from shapely.ops import unary_union

from clothoid import ClothoidSegment, Pose2D, poses_at
from config import (
    DEFAULT_GAP_THRESHOLD, DEFAULT_MARGINAL_BAND, FRONT_LENGTH, INTERSECT_DEDUP_TOL,
    INTERSECT_GRID_STEP, INTERSECT_RESIDUAL_TOL, INTERSECT_SEED_DIST, OVERLAP_ANGLE_TOL,
    OVERLAP_PARAM_TOL, POLYGON_STEP, REAR_OVERHANG, WHEELBASE, WIDTH
)
from exceptions import InvalidArgument, SpliceNotFound
from path_planner import ThreeClothoidPath, path_poses
from velocity_planner import MotionPlan, time_at

logger = logging.getLogger(__name__)

_NEWTON_ITER = 40
_CLAIM_SCAN_POINTS = 400
_CONNECTOR_TOL = 1e-6


class Corner(str, Enum):
    """Body points in the (xi, eta) frame at the rear-axle center."""
    A = "A"                    # rear axle, left end
    B = "B"                    # rear axle, right end
    C = "C"                    # front bumper, right
    D = "D"                    # front bumper, left
    E = "E"                    # rear bumper, left
    REAR_RIGHT = "rear-right"  # rear bumper, right


# counter-clockwise around the body
_RING = (Corner.REAR_RIGHT, Corner.B, Corner.C, Corner.D, Corner.A, Corner.E)


class VehicleGeometry(BaseModel):
    """Rectangular body around the rear axle."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    wheelbase: float = Field(WHEELBASE, gt=0)
    front_overhang: float = Field(FRONT_LENGTH - WHEELBASE, gt=0)
    rear_overhang: float = Field(REAR_OVERHANG, gt=0)
    width: float = Field(WIDTH, gt=0)

    @property
    def front_length(self) -> float:
        return self.wheelbase + self.front_overhang

    def offset(self, corner: Corner) -> Tuple[float, float]:
        half = 0.5 * self.width
        return {
            Corner.A: (0.0, half),
            Corner.B: (0.0, -half),
            Corner.C: (self.front_length, -half),
            Corner.D: (self.front_length, half),
            Corner.E: (-self.rear_overhang, half),
            Corner.REAR_RIGHT: (-self.rear_overhang, -half),
        }[Corner(corner)]


def body_points(pose: Pose2D, offsets: ArrayLike) -> NDArray:
    """World coordinates of body-frame points (n, 2) at a pose."""
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    return np.column_stack((
        pose.x + c * offsets[:, 0] - s * offsets[:, 1],
        pose.y + s * offsets[:, 0] + c * offsets[:, 1],
    ))


def body_polygon(pose: Pose2D, geom: VehicleGeometry) -> Polygon:
    return Polygon(body_points(pose, [geom.offset(c) for c in _RING]))


@dataclass(frozen=True)
class CornerTrace:
    """Path of one body point while the rear axle follows a clothoid segment."""
    segment: ClothoidSegment
    xi: float
    eta: float
    label: str = ""

    @property
    def length(self) -> float:
        return self.segment.length

    def __call__(self, s: ArrayLike) -> NDArray:
        scalar = np.ndim(s) == 0
        x, y, psi = poses_at(self.segment, np.atleast_1d(s))
        c, sn = np.cos(psi), np.sin(psi)
        points = np.column_stack((
            x + self.xi * c - self.eta * sn,
            y + self.xi * sn + self.eta * c,
        ))
        return points[0] if scalar else points

    def derivative(self, s: float) -> NDArray:
        psi = float(self.segment.heading(s))
        kappa = float(self.segment.curvature(s))
        c, sn = math.cos(psi), math.sin(psi)
        return np.array([
            c + kappa * (-self.xi * sn - self.eta * c),
            sn + kappa * (self.xi * c - self.eta * sn),
        ])


def corner_trace(seg: ClothoidSegment, geom: VehicleGeometry, corner: Corner) -> CornerTrace:
    xi, eta = geom.offset(corner)
    return CornerTrace(seg, xi, eta, Corner(corner).value)


def _center_trace(seg: ClothoidSegment) -> CornerTrace:
    return CornerTrace(seg, 0.0, 0.0, "R")


# Curve-curve intersections

def _param_grid(length: float) -> NDArray:
    count = max(2, int(math.ceil(length / INTERSECT_GRID_STEP)) + 1)
    return np.linspace(0.0, length, count)


def _newton_pair(f: CornerTrace, g: CornerTrace, u: float, v: float) -> Optional[Tuple[float, float]]:
    """Solve f(u) = g(v) inside both domains; None when no root is reached."""
    params = np.array([u, v], dtype=float)
    upper = np.array([f.length, g.length])
    residual = f(params[0]) - g(params[1])
    for _ in range(_NEWTON_ITER):
        if np.max(np.abs(residual)) < 1e-13:
            break
        jac = np.column_stack((f.derivative(params[0]), -g.derivative(params[1])))
        step = np.linalg.lstsq(jac, -residual, rcond=None)[0]
        params = np.clip(params + step, 0.0, upper)
        residual = f(params[0]) - g(params[1])
        if np.max(np.abs(step)) < 1e-14:
            break
    if np.linalg.norm(residual) >= INTERSECT_RESIDUAL_TOL:
        return None
    return float(params[0]), float(params[1])


def curve_intersections(f: CornerTrace, g: CornerTrace) -> List[Tuple[float, float]]:
    """
    All (u, v) with f(u) = g(v).

    Local minima of the distance on a 0.25 m parameter grid below 0.5 m seed
    a Newton refinement; roots closer than 1e-3 in both parameters merge.
    """
    grid_f, grid_g = _param_grid(f.length), _param_grid(g.length)
    pf, pg = f(grid_f), g(grid_g)
    dist = np.linalg.norm(pf[:, None, :] - pg[None, :, :], axis=-1)
    minima = (minimum_filter(dist, size=3, mode="nearest") == dist) & (dist < INTERSECT_SEED_DIST)

    roots: List[Tuple[float, float]] = []
    for i, j in zip(*np.nonzero(minima)):
        root = _newton_pair(f, g, grid_f[i], grid_g[j])
        if root is None:
            continue
        if any(abs(root[0] - r[0]) < INTERSECT_DEDUP_TOL and abs(root[1] - r[1]) < INTERSECT_DEDUP_TOL
               for r in roots):
            continue
        roots.append(root)
    return sorted(roots)


class SegmentIntersection(NamedTuple):
    s_a: float
    s_b: float
    x: float
    y: float
    overlap: bool = False


def _overlap_direction(seg_a: ClothoidSegment, seg_b: ClothoidSegment, s_a: float, s_b: float) -> int:
    """+1 / -1 when both segments lie on the same clothoid (same / opposite direction), else 0."""
    dpsi = float(seg_a.heading(s_a) - seg_b.heading(s_b))
    if abs(math.sin(dpsi)) >= OVERLAP_ANGLE_TOL:
        return 0
    kappa_a, kappa_b = float(seg_a.curvature(s_a)), float(seg_b.curvature(s_b))
    if abs(seg_a.sharpness - seg_b.sharpness) > OVERLAP_PARAM_TOL:
        return 0
    if math.cos(dpsi) > 0 and abs(kappa_a - kappa_b) <= OVERLAP_PARAM_TOL:
        return 1
    if math.cos(dpsi) < 0 and abs(kappa_a + kappa_b) <= OVERLAP_PARAM_TOL:
        return -1
    return 0


def clothoid_intersections(seg_a: ClothoidSegment, seg_b: ClothoidSegment) -> List[SegmentIntersection]:
    """
    Points where two clothoid segments meet.

    A shared stretch (both on one clothoid) is reported by its two end points
    flagged as overlap.
    """
    trace_a, trace_b = _center_trace(seg_a), _center_trace(seg_b)
    roots = curve_intersections(trace_a, trace_b)
    for s_a, s_b in roots:
        direction = _overlap_direction(seg_a, seg_b, s_a, s_b)
        if direction == 0:
            continue
        if direction > 0:
            lo = max(0.0, s_a - s_b)
            hi = min(seg_a.length, s_a + (seg_b.length - s_b))
        else:
            lo = max(0.0, s_a - (seg_b.length - s_b))
            hi = min(seg_a.length, s_a + s_b)
        ends = sorted({lo, hi})
        result = []
        for end in ends:
            partner = s_b + direction * (end - s_a)
            x, y = trace_a(end)
            result.append(SegmentIntersection(end, float(np.clip(partner, 0.0, seg_b.length)),
                                              float(x), float(y), True))
        return result

    result = []
    for s_a, s_b in roots:
        x, y = trace_a(s_a)
        result.append(SegmentIntersection(s_a, s_b, float(x), float(y), False))
    return result


# Conflicts between plans

Verdict = Literal["clear", "marginal", "conflict", "overlapping"]


class ConflictPoint(BaseModel):
    x: float
    y: float
    s_a: float
    s_b: float
    t_a: float
    t_b: float
    time_gap: float = Field(ge=0)
    verdict: Verdict


class ConflictReport(BaseModel):
    """Every crossing of two plans with arrival times and a verdict."""
    gap_threshold: float
    marginal_band: float = 0.0
    intersections: List[ConflictPoint] = []

    @property
    def has_conflict(self) -> bool:
        return any(p.verdict in ("conflict", "overlapping") for p in self.intersections)

    @property
    def verdict(self) -> Verdict:
        verdicts = {p.verdict for p in self.intersections}
        for level in ("overlapping", "conflict", "marginal"):
            if level in verdicts:
                return level
        return "clear"

    @property
    def min_time_gap(self) -> Optional[float]:
        return min((p.time_gap for p in self.intersections), default=None)


def _verdict(gap: float, overlap: bool, threshold: float, band: float) -> Verdict:
    if overlap:
        return "overlapping"
    if gap < threshold:
        return "conflict"
    if gap < threshold + band:
        return "marginal"
    return "clear"


def path_conflicts(plan_a: MotionPlan, plan_b: MotionPlan,
                   gap_threshold: float = DEFAULT_GAP_THRESHOLD,
                   marginal_band: float = DEFAULT_MARGINAL_BAND) -> ConflictReport:
    """
    Intersect both paths segment by segment and compare arrival times.

    Raises:
        StoppedFlow: a plan stops before reaching an intersection
    """
    if gap_threshold < 0 or marginal_band < 0:
        raise InvalidArgument("gap threshold and marginal band must be non-negative")
    found: List[SegmentIntersection] = []
    for seg_a, off_a in zip(plan_a.path.segments, plan_a.path.offsets):
        for seg_b, off_b in zip(plan_b.path.segments, plan_b.path.offsets):
            for hit in clothoid_intersections(seg_a, seg_b):
                found.append(hit._replace(s_a=off_a + hit.s_a, s_b=off_b + hit.s_b))

    # junction points show up once per adjacent segment; overlaps take precedence
    unique: List[SegmentIntersection] = []
    for hit in sorted(found, key=lambda h: (not h.overlap, h.s_a, h.s_b)):
        if any(abs(hit.s_a - u.s_a) < INTERSECT_DEDUP_TOL and abs(hit.s_b - u.s_b) < INTERSECT_DEDUP_TOL
               for u in unique):
            continue
        unique.append(hit)

    points = []
    for hit in sorted(unique, key=lambda h: (h.s_a, h.s_b)):
        t_a = time_at(plan_a.velocity, min(hit.s_a, plan_a.velocity.s_f))
        t_b = time_at(plan_b.velocity, min(hit.s_b, plan_b.velocity.s_f))
        gap = abs(t_a - t_b)
        points.append(ConflictPoint(
            x=hit.x, y=hit.y, s_a=hit.s_a, s_b=hit.s_b, t_a=t_a, t_b=t_b, time_gap=gap,
            verdict=_verdict(gap, hit.overlap, gap_threshold, marginal_band),
        ))
    report = ConflictReport(gap_threshold=gap_threshold, marginal_band=marginal_band, intersections=points)
    logger.info(f"conflict check: {len(points)} intersection(s), verdict {report.verdict}")
    return report


# Swept volume

@dataclass(frozen=True)
class BoundaryCurve:
    """One piece of the swept boundary loop, sampled in traversal order."""
    label: str
    segment: Optional[int]
    s_from: float
    s_to: float
    points: NDArray


class _TracePiece(NamedTuple):
    segment: int
    corner: Corner
    s_from: float
    s_to: float


def _inflection(seg: ClothoidSegment) -> Optional[float]:
    """Arclength strictly inside the segment where the curvature crosses zero."""
    if seg.sharpness == 0:
        return None
    s_zero = -seg.kappa_hat / seg.sharpness
    return s_zero if 0 < s_zero < seg.length else None


def _splice(seg: ClothoidSegment, geom: VehicleGeometry, k: int,
            first: Corner, second: Corner) -> List[_TracePiece]:
    """First trace until it meets the second one, then the second trace."""
    roots = curve_intersections(corner_trace(seg, geom, first), corner_trace(seg, geom, second))
    roots = [r for r in roots if 0 < r[0] < seg.length]
    if not roots:
        raise SpliceNotFound(f"traces {first.value} and {second.value} do not meet on segment {k}")
    u, v = min(roots)
    return [_TracePiece(k, first, 0.0, u), _TracePiece(k, second, v, seg.length)]


def _side_pieces(seg: ClothoidSegment, geom: VehicleGeometry, k: int) -> Tuple[List[_TracePiece], List[_TracePiece]]:
    """
    Left and right boundary traces of one segment, chosen by the curvature sign.

    Across an inflection the side that turns from inner to outer keeps the
    axle corner up to the inflection, then the side edge at that pose, then
    the front corner. The other side splices the front corner into the
    axle corner where the two traces cross.
    """
    kh, kp, length = seg.kappa_hat, seg.sharpness, seg.length
    turning_left = kh + 0.5 * kp * length >= 0
    s_zero = _inflection(seg)
    if s_zero is None:
        if turning_left:
            return [_TracePiece(k, Corner.A, 0.0, length)], [_TracePiece(k, Corner.C, 0.0, length)]
        return [_TracePiece(k, Corner.D, 0.0, length)], [_TracePiece(k, Corner.B, 0.0, length)]

    if kh > 0:
        axle, front, splice_order = Corner.A, Corner.D, (Corner.C, Corner.B)
        fallback = Corner.C if turning_left else Corner.B
    else:
        axle, front, splice_order = Corner.B, Corner.C, (Corner.D, Corner.A)
        fallback = Corner.A if turning_left else Corner.D
    handover = [_TracePiece(k, axle, 0.0, s_zero), _TracePiece(k, front, s_zero, length)]
    try:
        spliced = _splice(seg, geom, k, *splice_order)
    except SpliceNotFound as e:
        logger.warning(f"{e}; using trace {fallback.value} for the whole segment")
        spliced = [_TracePiece(k, fallback, 0.0, length)]
    return (handover, spliced) if kh > 0 else (spliced, handover)


def _sample_piece(path: ThreeClothoidPath, geom: VehicleGeometry, piece: _TracePiece,
                  reverse: bool = False) -> BoundaryCurve:
    s_from, s_to = (piece.s_to, piece.s_from) if reverse else (piece.s_from, piece.s_to)
    count = max(2, int(math.ceil(abs(s_to - s_from) / POLYGON_STEP)) + 1)
    trace = corner_trace(path.segments[piece.segment], geom, piece.corner)
    return BoundaryCurve(piece.corner.value, piece.segment, s_from, s_to,
                         trace(np.linspace(s_from, s_to, count)))


def _side_curves(path: ThreeClothoidPath, geom: VehicleGeometry,
                 pieces: Sequence[_TracePiece]) -> List[BoundaryCurve]:
    """Forward traversal of one side; a straight body-edge connector bridges each corner change."""
    curves: List[BoundaryCurve] = []
    for piece in pieces:
        curve = _sample_piece(path, geom, piece)
        if curves and np.linalg.norm(curves[-1].points[-1] - curve.points[0]) > _CONNECTOR_TOL:
            ends = np.vstack([curves[-1].points[-1], curve.points[0]])
            curves.append(BoundaryCurve("connector", piece.segment, piece.s_from, piece.s_from, ends))
        curves.append(curve)
    return curves


def _ring_walk(pose: Pose2D, geom: VehicleGeometry, start: Corner, stop: Corner, label: str) -> BoundaryCurve:
    i = _RING.index(start)
    corners = [start]
    while corners[-1] != stop:
        i = (i + 1) % len(_RING)
        corners.append(_RING[i])
    return BoundaryCurve(label, None, 0.0, 0.0, body_points(pose, [geom.offset(c) for c in corners]))


def _reversed(curve: BoundaryCurve) -> BoundaryCurve:
    return BoundaryCurve(curve.label, curve.segment, curve.s_to, curve.s_from, curve.points[::-1])


@dataclass
class SweptBoundary:
    """
    Closed boundary of the area swept by the body, counter-clockwise: right
    side forward, final rectangle across the front, left side backward,
    initial rectangle across the rear.

    `polygon` is the swept area itself and also covers the rear overhang
    where it swings past the traced loop.
    """
    curves: List[BoundaryCurve]
    polygon: shapely.Geometry

    def loop(self) -> NDArray:
        return np.vstack([c.points for c in self.curves])

    def closure_gap(self) -> float:
        """Largest gap between consecutive curve ends, including last to first."""
        gaps = [
            np.linalg.norm(self.curves[i].points[-1] - self.curves[(i + 1) % len(self.curves)].points[0])
            for i in range(len(self.curves))
        ]
        return float(max(gaps))

    def to_frame(self) -> pd.DataFrame:
        rows = [
            pd.DataFrame({"x": c.points[:, 0], "y": c.points[:, 1], "curve": f"{i}:{c.label}"})
            for i, c in enumerate(self.curves)
        ]
        return pd.concat(rows, ignore_index=True)

    def to_dict(self) -> dict:
        return {
            "area": float(self.polygon.area),
            "curves": [
                {"label": c.label, "segment": c.segment, "s_from": c.s_from, "s_to": c.s_to,
                 "points": c.points.tolist()}
                for c in self.curves
            ],
        }


def _polygonal(geometry: shapely.Geometry) -> shapely.Geometry:
    parts = [g for g in getattr(geometry, "geoms", [geometry]) if g.area > 0]
    return unary_union(parts) if parts else Polygon()


def _body_trace(x: NDArray, y: NDArray, psi: NDArray, offset: Tuple[float, float]) -> NDArray:
    xi, eta = offset
    c, sn = np.cos(psi), np.sin(psi)
    return np.column_stack((x + xi * c - eta * sn, y + xi * sn + eta * c))


def _sign_breaks(path: ThreeClothoidPath) -> NDArray:
    """Arclengths between which the curvature keeps one sign."""
    breaks = [0.0, path.s_f, *path.breakpoints]
    for seg, offset in zip(path.segments, path.offsets):
        s_zero = _inflection(seg)
        if s_zero is not None:
            breaks.append(offset + s_zero)
    return np.unique(breaks)


def _edge_sweep(path: ThreeClothoidPath, first: Tuple[float, float], second: Tuple[float, float],
                s_lo: float, s_hi: float) -> shapely.Geometry:
    """Area covered by the body edge first-second while the rear axle runs from s_lo to s_hi."""
    count = max(2, int(math.ceil((s_hi - s_lo) / POLYGON_STEP)) + 1)
    x, y, psi = path_poses(path, np.linspace(s_lo, s_hi, count))
    ring = np.vstack([_body_trace(x, y, psi, first), _body_trace(x, y, psi, second)[::-1]])
    return _polygonal(shapely.make_valid(Polygon(ring)))


def _edge_sweeps(path: ThreeClothoidPath, geom: VehicleGeometry) -> List[shapely.Geometry]:
    """
    Areas swept by the body edges.

    The front and rear edges always move forward. Each half of a side edge,
    split at the rear axle, drifts to one side only while the curvature keeps
    its sign, so every piece is bounded by its two end traces.
    """
    offset = geom.offset
    regions = [
        _edge_sweep(path, offset(Corner.C), offset(Corner.D), 0.0, path.s_f),
        _edge_sweep(path, offset(Corner.REAR_RIGHT), offset(Corner.E), 0.0, path.s_f),
    ]
    breaks = _sign_breaks(path)
    for s_lo, s_hi in zip(breaks[:-1], breaks[1:]):
        for axle, end in ((Corner.A, Corner.D), (Corner.A, Corner.E),
                          (Corner.B, Corner.C), (Corner.B, Corner.REAR_RIGHT)):
            regions.append(_edge_sweep(path, offset(axle), offset(end), float(s_lo), float(s_hi)))
    return regions


def swept_boundary(path: ThreeClothoidPath, geom: Optional[VehicleGeometry] = None) -> SweptBoundary:
    """
    Boundary of the swept volume built from corner traces per segment plus the
    initial and final body rectangles, polygonized at 1 cm.

    Any body point either stays inside the final rectangle or leaves the body
    across one of its edges, so the polygon is the union of the traced loop,
    both end rectangles and the areas swept by the four edges.
    """
    geom = geom or VehicleGeometry()
    left: List[_TracePiece] = []
    right: List[_TracePiece] = []
    for k, seg in enumerate(path.segments):
        if seg.length <= 0:
            continue
        seg_left, seg_right = _side_pieces(seg, geom, k)
        left.extend(seg_left)
        right.extend(seg_right)

    start, end = path.origin, path.end
    right_curves = _side_curves(path, geom, right)
    left_curves = _side_curves(path, geom, left)
    curves = (
        right_curves
        + [_ring_walk(end, geom, right[-1].corner, left[-1].corner, "final")]
        + [_reversed(c) for c in reversed(left_curves)]
        + [_ring_walk(start, geom, left[0].corner, right[0].corner, "initial")]
    )

    ring = np.vstack([c.points for c in curves])
    region = _polygonal(shapely.make_valid(Polygon(ring)))
    polygon = unary_union([region, body_polygon(start, geom), body_polygon(end, geom),
                           *_edge_sweeps(path, geom)])
    logger.debug(f"swept area {polygon.area:.3f} m^2 over {path.s_f:.3f} m")
    return SweptBoundary(curves, polygon)


def swept_overlap(path_a: ThreeClothoidPath, path_b: ThreeClothoidPath,
                  geom_a: Optional[VehicleGeometry] = None,
                  geom_b: Optional[VehicleGeometry] = None) -> bool:
    """True when the swept areas cross or one contains the other."""
    area_a = swept_boundary(path_a, geom_a).polygon
    area_b = swept_boundary(path_b, geom_b).polygon
    return bool(area_a.intersects(area_b))


# Claims on the corner traces

class ClaimCheck(NamedTuple):
    claim21_holds: bool
    claim22_holds: bool
    claim3_holds: bool
    eta_int1: Optional[float] = None
    eta_int2: Optional[float] = None
    eta_int3: Optional[float] = None


def _first_root(h: Callable[[float], float], s_max: float) -> Optional[float]:
    grid = np.linspace(0.0, s_max, _CLAIM_SCAN_POINTS)
    values = np.asarray(h(grid), dtype=float)
    for i in range(1, grid.size):
        if values[i - 1] < 0 <= values[i]:
            return brentq(lambda s: float(h(s)), grid[i - 1], grid[i], xtol=1e-13)
    return None


def claim_region_check(kappa_hat: float, sharpness: float,
                       geom: Optional[VehicleGeometry] = None) -> ClaimCheck:
    """
    Check that, for one segment with non-negative initial curvature and
    sharpness, the rear-left corner E crosses the rear-axle line no further
    left than A (claim21), the left edge stays inside the trace of A
    (claim22) and the right edge stays inside the trace of C (claim3).

    Each claim is decided by where a trace first crosses a line through the
    instantaneous center O = (0, 1/kappa_hat); no crossing within half a turn
    means the claim holds.
    """
    geom = geom or VehicleGeometry()
    if kappa_hat < 0 or sharpness < 0:
        raise InvalidArgument("claims need kappa_hat >= 0 and sharpness >= 0")
    if kappa_hat == 0:
        return ClaimCheck(True, True, True)

    if sharpness > 0:
        s_max = (-kappa_hat + math.sqrt(kappa_hat ** 2 + 2 * math.pi * sharpness)) / sharpness
    else:
        s_max = math.pi / kappa_hat
    seg = ClothoidSegment(Pose2D(0.0, 0.0, 0.0), kappa_hat, sharpness, s_max)
    half, front, radius = 0.5 * geom.width, geom.front_length, 1.0 / kappa_hat

    trace_e = corner_trace(seg, geom, Corner.E)
    s_bar = _first_root(lambda s: trace_e(s)[..., 0], s_max)
    eta1 = None if s_bar is None else float(trace_e(s_bar)[1])

    trace_a = corner_trace(seg, geom, Corner.A)
    slope_d = (radius - half) / front
    s_bar = _first_root(lambda s: slope_d * trace_a(s)[..., 0] + trace_a(s)[..., 1] - radius, s_max)
    eta2 = None if s_bar is None else float(trace_a(s_bar)[1])

    trace_b = corner_trace(seg, geom, Corner.B)
    slope_c = (radius + half) / front
    s_bar = _first_root(lambda s: slope_c * trace_b(s)[..., 0] + trace_b(s)[..., 1] - radius, s_max)
    eta3 = None if s_bar is None else float(trace_b(s_bar)[1])

    return ClaimCheck(
        eta1 is None or eta1 <= half + 1e-12,
        eta2 is None or eta2 >= half - 1e-12,
        eta3 is None or eta3 >= -half - 1e-12,
        eta1, eta2, eta3,
    )
