"""
Error types raised by the planner modules
"""
from typing import Optional


class CloplanError(Exception):
    """Base class for every planner error."""


class InvalidArgument(CloplanError, ValueError):
    """Non-finite or otherwise unusable input."""


class OutOfRange(InvalidArgument):
    """Arclength outside the domain of a segment, path or plan."""


class NoConvergence(CloplanError):
    """Newton iteration failed for every seed."""


class DegenerateChord(CloplanError):
    """Start and goal coincide but headings differ."""


class InfeasibleStart(CloplanError):
    """Initial speed already exceeds the speed bound at s = 0."""


class SmoothingOverrun(CloplanError):
    """A jerk ramp does not fit into the segment that hosts it."""

    def __init__(self, junction: int, required: float, available: float):
        self.junction = junction
        self.required = required
        self.available = available
        super().__init__(
            f"smoothing ramp at junction {junction} needs {required:.6g} m "
            f"but only {available:.6g} m is available"
        )


class StoppedFlow(CloplanError):
    """The speed profile reaches zero, so time is undefined along arclength."""


class DecodeError(CloplanError):
    """Malformed plan record; `field` names the first check that failed."""

    def __init__(self, field: str, message: Optional[str] = None):
        self.field = field
        super().__init__(message or f"invalid {field}")


class InconsistentPlan(CloplanError):
    """Path and velocity plan disagree on segment lengths."""


class SpliceNotFound(CloplanError):
    """No crossing between two corner traces on a mixed-sign segment."""


class ScenarioError(CloplanError):
    """Scenario or override file failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
