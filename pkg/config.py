"""
Configuration and constants for the three-clothoid motion planner
"""
import math

# Application Configuration
APP_NAME = "cloplan"
APP_TAGLINE = "Three-clothoid paths, jerk-limited speed plans and compact plan messages"
APP_VERSION = "1.0.0"

# Environment
ENV_THREADS = "CLOPLAN_THREADS"
ENV_LOG_LEVEL = "CLOPLAN_LOG_LEVEL"
DEFAULT_LOG_LEVEL = "INFO"

# Vehicle Limits
GAMMA_MAX = math.pi / 6
OMEGA_MAX = 2 * math.pi
A_MIN = -8.0
A_MAX = 3.0
J_MAX = 2.0
A_LAT_MAX = 3.0
KAPPA_MAX_NOMINAL = 0.2
WHEELBASE = math.tan(GAMMA_MAX) / KAPPA_MAX_NOMINAL
V_CAP = 30.0

# Vehicle Geometry
FRONT_LENGTH = 3.8  # l + d_f
REAR_OVERHANG = 1.0
WIDTH = 1.9

# Fresnel Quadrature
FRESNEL_EPSABS = 1e-12
FRESNEL_SMALL_A = 1e-6
FRESNEL_SERIES_B = 0.5
FRESNEL_SERIES_TERMS = 25

# Path Solver
CHORD_MIN = 1e-9
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 20
FD_REL_STEP = 1e-7
RESIDUAL_CHECK_TOL = 1e-9
SEED_S1_FACTORS = (0.5, 1.0, 2.0, 4.0)
SEED_S1_MIN_FRACTION = 0.1

# Feasibility Charts
BOUNDARY_ACCEPT_TOL = 1e-4
BOUNDARY_XTOL_FACTOR = 0.1
BOUNDARY_BISECT_XTOL = 1e-7

# Velocity Planner
ACCEL_GRID_STEP = 0.01
ACCEL_REFINE_TOL = 1e-6
TIME_EPSABS = 1e-9

# Velocity Case Tags
CASE_LL = 0
CASE_GG = 1
CASE_LG = 2
CASE_GL = 3
CASE_NAMES = {
    CASE_LL: "LL",
    CASE_GG: "GG",
    CASE_LG: "LG",
    CASE_GL: "GL",
}

# Plan Message
MESSAGE_MAGIC = b"CLO1"
MESSAGE_VERSION = 1
MESSAGE_BODY_FORMAT = "<4sBB19d"
MESSAGE_CRC_FORMAT = "<I"
MESSAGE_FIELDS = (
    "x0", "y0", "psi0",
    "s0", "s1", "s2",
    "kappa0", "kappa1", "kappa2", "kp1",
    "v0", "v_aux1", "v_aux2",
    "a0", "a1", "a2",
    "jc", "smooth_a", "smooth_b",
)

# Collision
INTERSECT_GRID_STEP = 0.25
INTERSECT_SEED_DIST = 0.5
INTERSECT_RESIDUAL_TOL = 1e-7
INTERSECT_DEDUP_TOL = 1e-3
OVERLAP_ANGLE_TOL = 1e-6
OVERLAP_PARAM_TOL = 1e-9
POLYGON_STEP = 0.01
DEFAULT_GAP_THRESHOLD = 2.0
DEFAULT_MARGINAL_BAND = 0.0

# Output
TRAJECTORY_DS = 0.1
TRAJECTORY_COLUMNS = ["s", "x", "y", "psi", "kappa", "v", "a", "t"]
VELOCITY_COLUMNS = ["s", "v", "a", "t"]
CHART_COLUMNS = ["dx", "dy", "side"]
PLAN_JSON = "plan.json"
PLAN_BIN = "plan.bin"
PLAN_SVG = "plan.svg"
TRAJECTORY_CSV = "trajectory.csv"

# Exit Codes
EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INFEASIBLE = 3
EXIT_CONFLICT = 4
EXIT_VELOCITY = 5
