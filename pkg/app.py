"""
Command-line front end for the three-clothoid motion planner
"""
import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

import charts
from codec import (
    MotionPlanMessage, RECORD_SIZE, decode, pack, reconstruct, trajectory_frame, unpack
)
from collision import VehicleGeometry, path_conflicts, swept_boundary
from config import (
    APP_NAME, APP_TAGLINE, APP_VERSION, DEFAULT_GAP_THRESHOLD, DEFAULT_LOG_LEVEL,
    DEFAULT_MARGINAL_BAND, ENV_LOG_LEVEL, EXIT_BAD_INPUT, EXIT_CONFLICT, EXIT_INFEASIBLE,
    EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_VELOCITY, PLAN_BIN, PLAN_JSON, PLAN_SVG,
    TRAJECTORY_COLUMNS, TRAJECTORY_CSV, TRAJECTORY_DS
)
from exceptions import (
    DecodeError, DegenerateChord, InconsistentPlan, InfeasibleStart, InvalidArgument,
    NoConvergence, ScenarioError, SmoothingOverrun, StoppedFlow
)
from path_planner import ChartWindow, VehicleLimits, feasibility_boundary
from scenario import Scenario, ScenarioPlan, load_model_file, plan_scenario, read_scenario
from utils import read_json, resolve_workers, stopwatch, write_frame_csv, write_json

logger = logging.getLogger(__name__)


def _fail(code: int, reason: str, **fields) -> int:
    """Log the failure and print one machine-parsable line to stderr."""
    details = " ".join(f"{key}={value}" for key, value in fields.items())
    line = f"reason={reason} {details}".rstrip()
    logger.error(line)
    print(line, file=sys.stderr)
    return code


class _Context:
    """Global flags resolved once per invocation."""

    def __init__(self, args: argparse.Namespace):
        self.out_dir = Path(args.out_dir)
        self.svg = args.svg
        self.limits: Optional[VehicleLimits] = None
        self.geometry: Optional[VehicleGeometry] = None
        if args.limits_file:
            self.limits = self._load(args.limits_file, VehicleLimits)
        if args.geometry_file:
            self.geometry = self._load(args.geometry_file, VehicleGeometry)

    @staticmethod
    def _load(path, model):
        value, message = load_model_file(path, model)
        if value is None:
            field, _, detail = message.partition(": ")
            raise ScenarioError(field, detail or message)
        return value

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def geometry_for(self, scenario: Scenario) -> VehicleGeometry:
        return self.geometry or scenario.geometry


def _infeasible(planned: ScenarioPlan) -> int:
    return _fail(
        EXIT_INFEASIBLE, "infeasible_curvature",
        scenario=planned.scenario.name,
        max_kappa=f"{planned.feasibility.max_abs_curvature:.6g}",
        kappa_max=f"{planned.limits.kappa_max:.6g}",
        at_s=f"{planned.feasibility.argmax_s:.6g}",
    )


def cmd_plan(args: argparse.Namespace, ctx: _Context) -> int:
    scenario = read_scenario(args.scenario)
    planned = plan_scenario(scenario, ctx.limits)
    if not planned.feasible:
        return _infeasible(planned)

    message = MotionPlanMessage.from_plan(planned.path, planned.motion.velocity)
    summary = planned.summary()
    write_json({"message": message.model_dump(), "summary": summary}, ctx.path(PLAN_JSON))
    ctx.path(PLAN_BIN).write_bytes(pack(message))
    write_frame_csv(reconstruct(message, TRAJECTORY_DS), ctx.path(TRAJECTORY_CSV), TRAJECTORY_COLUMNS)
    if ctx.svg:
        charts.save_svg(charts.plan_figure(planned.motion, planned.limits), ctx.path(PLAN_SVG))
    print(f"plan {scenario.name}: {planned.path.s_f:.3f} m, {summary['total_time_s']:.3f} s")
    return EXIT_OK


def cmd_chart(args: argparse.Namespace, ctx: _Context) -> int:
    window = ChartWindow(*args.window)
    chart = feasibility_boundary(args.dpsi, args.kappa0, args.s0, window, args.resolution,
                                 limits=ctx.limits, workers=resolve_workers())
    out = ctx.path(args.out)
    write_frame_csv(chart.to_frame(), out)
    if ctx.svg:
        charts.save_svg(charts.feasibility_figure(chart), out.with_suffix(".svg"))
    print(f"chart: {len(chart.boundary)} boundary points")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace, ctx: _Context) -> int:
    data = Path(args.plan_bin).read_bytes()
    with stopwatch() as watch:
        plan = decode(data)
        frame = trajectory_frame(plan, args.ds)
    write_frame_csv(frame, ctx.path(args.out), TRAJECTORY_COLUMNS)
    print(f"decoded {len(frame)} samples in {watch.elapsed:.4f} s")
    return EXIT_OK


def cmd_encode(args: argparse.Namespace, ctx: _Context) -> int:
    data, status = read_json(args.plan_json)
    if data is None:
        field, _, detail = status.partition(": ")
        raise ScenarioError(field, detail or status)
    message = MotionPlanMessage.model_validate(data.get("message", data))
    record = pack(message)
    unpack(record)
    ctx.path(args.out).write_bytes(record)
    print(f"encoded {RECORD_SIZE} bytes")
    return EXIT_OK


def cmd_conflict(args: argparse.Namespace, ctx: _Context) -> int:
    first = read_scenario(args.scenario_a)
    second = read_scenario(args.scenario_b) if args.scenario_b else first.other
    if second is None:
        raise ScenarioError("other", "conflict mode needs a second scenario")
    plans = []
    for scenario in (first, second):
        planned = plan_scenario(scenario, ctx.limits)
        if not planned.feasible:
            return _infeasible(planned)
        plans.append(planned.motion)

    report = path_conflicts(plans[0], plans[1], args.gap_threshold, args.marginal_band)
    out = ctx.path(args.out)
    write_json({"verdict": report.verdict, **report.model_dump()}, out)
    if ctx.svg:
        charts.save_svg(charts.conflict_figure(plans[0], plans[1], report), out.with_suffix(".svg"))
    if report.has_conflict:
        gap = report.min_time_gap
        return _fail(EXIT_CONFLICT, "conflict", intersections=len(report.intersections),
                     min_gap=f"{gap:.6g}", threshold=f"{args.gap_threshold:g}")
    print(f"conflict check: {report.verdict}, {len(report.intersections)} intersection(s)")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, ctx: _Context) -> int:
    scenario = read_scenario(args.scenario)
    planned = plan_scenario(scenario, ctx.limits, with_velocity=False)
    boundary = swept_boundary(planned.path, ctx.geometry_for(scenario))
    write_frame_csv(boundary.to_frame(), ctx.path(f"{args.out}.csv"))
    write_json(boundary.to_dict(), ctx.path(f"{args.out}.json"))
    if ctx.svg:
        charts.save_svg(charts.swept_figure(boundary), ctx.path(f"{args.out}.svg"))
    print(f"swept area {boundary.polygon.area:.3f} m^2")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_TAGLINE)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--limits-file", help="JSON overrides for the vehicle limits")
    parser.add_argument("--geometry-file", help="JSON overrides for the vehicle geometry")
    parser.add_argument("--out-dir", default=".", help="directory for every written file")
    parser.add_argument("--svg", action="store_true", help="also render SVG figures")
    parser.add_argument("--log-level", default=os.environ.get(ENV_LOG_LEVEL, DEFAULT_LOG_LEVEL))
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan a scenario and write plan.json, plan.bin, trajectory.csv")
    plan.add_argument("scenario")
    plan.set_defaults(handler=cmd_plan)

    chart = sub.add_parser("chart", help="trace the feasibility boundary over a goal window")
    chart.add_argument("--dpsi", type=float, default=math.pi / 2)
    chart.add_argument("--kappa0", type=float, default=0.0)
    chart.add_argument("--s0", type=float, default=5.0)
    chart.add_argument("--window", type=float, nargs=4, required=True,
                       metavar=("DX_MIN", "DX_MAX", "DY_MIN", "DY_MAX"))
    chart.add_argument("--resolution", type=float, default=0.25)
    chart.add_argument("--out", default="chart.csv")
    chart.set_defaults(handler=cmd_chart)

    dec = sub.add_parser("decode", help="rebuild the trajectory from a plan record")
    dec.add_argument("plan_bin")
    dec.add_argument("--ds", type=float, default=TRAJECTORY_DS)
    dec.add_argument("--out", default=TRAJECTORY_CSV)
    dec.set_defaults(handler=cmd_decode)

    enc = sub.add_parser("encode", help="pack the message of a plan.json into a record")
    enc.add_argument("plan_json")
    enc.add_argument("--out", default=PLAN_BIN)
    enc.set_defaults(handler=cmd_encode)

    conflict = sub.add_parser("conflict", help="check two scenarios for path conflicts")
    conflict.add_argument("scenario_a")
    conflict.add_argument("scenario_b", nargs="?", help="defaults to the `other` agent of scenario_a")
    conflict.add_argument("--gap-threshold", type=float, default=DEFAULT_GAP_THRESHOLD)
    conflict.add_argument("--marginal-band", type=float, default=DEFAULT_MARGINAL_BAND)
    conflict.add_argument("--out", default="conflict.json")
    conflict.set_defaults(handler=cmd_conflict)

    sweep = sub.add_parser("sweep", help="export the swept-area boundary of a scenario")
    sweep.add_argument("scenario")
    sweep.add_argument("--out", default="swept")
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application function"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_BAD_INPUT

    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        ctx = _Context(args)
        return args.handler(args, ctx)
    except ScenarioError as e:
        return _fail(EXIT_BAD_INPUT, "bad_input", field=e.field)
    except DecodeError as e:
        return _fail(EXIT_BAD_INPUT, "decode_error", field=e.field)
    except ValidationError as e:
        loc = e.errors()[0]["loc"]
        return _fail(EXIT_BAD_INPUT, "bad_input", field=".".join(str(p) for p in loc) or "input")
    except InconsistentPlan as e:
        return _fail(EXIT_BAD_INPUT, "inconsistent_plan", detail=str(e).replace(" ", "_"))
    except NoConvergence:
        return _fail(EXIT_NO_CONVERGENCE, "no_convergence")
    except DegenerateChord:
        return _fail(EXIT_NO_CONVERGENCE, "degenerate_chord")
    except SmoothingOverrun as e:
        return _fail(EXIT_VELOCITY, "smoothing_overrun", junction=e.junction,
                     required=f"{e.required:.6g}", available=f"{e.available:.6g}")
    except InfeasibleStart:
        return _fail(EXIT_VELOCITY, "infeasible_start")
    except StoppedFlow:
        return _fail(EXIT_VELOCITY, "stopped_flow")
    except InvalidArgument as e:
        return _fail(EXIT_BAD_INPUT, "invalid_argument", detail=type(e).__name__)
    except OSError as e:
        return _fail(EXIT_BAD_INPUT, "io_error", file=getattr(e, "filename", None) or "unknown")


if __name__ == "__main__":
    sys.exit(main())
