"""
Plotly figures for feasibility charts, plans, conflicts and swept areas
"""
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from codec import trajectory_frame
from collision import ConflictReport, SweptBoundary
from path_planner import FeasibilityChart, VehicleLimits
from velocity_planner import MotionPlan, VelocityBound

logger = logging.getLogger(__name__)

PRIMARY = "#1E88E5"
LIGHT = "#90CAF9"
DARK = "#0D47A1"
ACCENT = "#FF9800"
GREEN = "#4CAF50"

_LAYOUT = dict(font=dict(size=12), title_font=dict(size=16, color=DARK), template="plotly_white")


def _equal_axes(fig: go.Figure) -> go.Figure:
    fig.update_yaxes(scaleanchor="x", scaleratio=1)
    return fig


def feasibility_figure(chart: FeasibilityChart) -> go.Figure:
    """Feasible goal samples and the traced boundary in the (dx, dy) plane."""
    gx, gy = np.meshgrid(chart.xs, chart.ys)
    ok = chart.feasible
    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=gx[ok], y=gy[ok], mode="markers", name="Feasible goal",
        marker=dict(color=LIGHT, size=4),
    ))
    fig.add_trace(go.Scatter(
        x=chart.boundary["dx"], y=chart.boundary["dy"], mode="markers", name="Boundary",
        marker=dict(color=DARK, size=5),
    ))
    fig.update_layout(
        title=f"Feasible goals, dpsi={chart.dpsi:.3f} rad, kappa0={chart.kappa0:g} 1/m, s0={chart.s0:g} m",
        xaxis_title="dx [m]",
        yaxis_title="dy [m]",
        **_LAYOUT,
    )
    return _equal_axes(fig)


def plan_figure(plan: MotionPlan, limits: VehicleLimits, ds: float = 0.1) -> go.Figure:
    """Path on the left, speed against its bound on the right."""
    frame = trajectory_frame(plan, ds)
    bound = VelocityBound(plan.path, limits)(frame["s"].to_numpy())
    fig = make_subplots(rows=1, cols=2, subplot_titles=("Path", "Speed"))
    fig.add_trace(go.Scatter(x=frame["x"], y=frame["y"], mode="lines", name="Path",
                             line=dict(color=PRIMARY)), row=1, col=1)
    fig.add_trace(go.Scatter(x=frame["s"], y=frame["v"], mode="lines", name="v",
                             line=dict(color=PRIMARY)), row=1, col=2)
    fig.add_trace(go.Scatter(x=frame["s"], y=bound, mode="lines", name="Speed bound",
                             line=dict(color=ACCENT, dash="dash")), row=1, col=2)
    fig.update_xaxes(title_text="x [m]", row=1, col=1)
    fig.update_yaxes(title_text="y [m]", scaleanchor="x", scaleratio=1, row=1, col=1)
    fig.update_xaxes(title_text="s [m]", row=1, col=2)
    fig.update_yaxes(title_text="v [m/s]", row=1, col=2)
    fig.update_layout(title=f"Plan ({plan.velocity.case_name})", height=500, **_LAYOUT)
    return fig


def conflict_figure(plan_a: MotionPlan, plan_b: MotionPlan, report: ConflictReport,
                    ds: float = 0.1) -> go.Figure:
    colors = {"clear": GREEN, "marginal": ACCENT, "conflict": "#E53935", "overlapping": "#E53935"}
    fig = go.Figure()
    for name, plan, color in (("Plan A", plan_a, PRIMARY), ("Plan B", plan_b, GREEN)):
        frame = trajectory_frame(plan, ds)
        fig.add_trace(go.Scatter(x=frame["x"], y=frame["y"], mode="lines", name=name,
                                 line=dict(color=color)))
    if report.intersections:
        fig.add_trace(go.Scatter(
            x=[p.x for p in report.intersections],
            y=[p.y for p in report.intersections],
            mode="markers",
            name="Intersection",
            text=[f"{p.verdict}, gap {p.time_gap:.2f} s" for p in report.intersections],
            marker=dict(size=10, color=[colors[p.verdict] for p in report.intersections]),
        ))
    fig.update_layout(title=f"Conflict check: {report.verdict}", xaxis_title="x [m]",
                      yaxis_title="y [m]", **_LAYOUT)
    return _equal_axes(fig)


def swept_figure(boundary: SweptBoundary, plan: Optional[MotionPlan] = None) -> go.Figure:
    loop = boundary.loop()
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=loop[:, 0], y=loop[:, 1], mode="lines", fill="toself",
                             name="Swept boundary", line=dict(color=DARK),
                             fillcolor="rgba(144, 202, 249, 0.4)"))
    if plan is not None:
        frame = trajectory_frame(plan, 0.1)
        fig.add_trace(go.Scatter(x=frame["x"], y=frame["y"], mode="lines", name="Rear axle",
                                 line=dict(color=PRIMARY, dash="dot")))
    fig.update_layout(title=f"Swept area {boundary.polygon.area:.2f} m^2", xaxis_title="x [m]",
                      yaxis_title="y [m]", **_LAYOUT)
    return _equal_axes(fig)


def save_svg(fig: go.Figure, path) -> Path:
    """
    Export a figure as SVG; writes an HTML file next to it when the static
    image backend is unavailable.

    Returns:
        Path of the file actually written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.write_image(str(path), format="svg")
        logger.info(f"Wrote {path}")
        return path
    except Exception as e:
        fallback = path.with_suffix(".html")
        logger.warning(f"SVG export failed ({e}); writing {fallback} instead")
        fig.write_html(str(fallback), include_plotlyjs="cdn")
        return fallback
