"""
Compact 19-parameter plan message: binary record, JSON mirror and
trajectory reconstruction
"""
from __future__ import annotations

import logging
import math
import struct
import zlib
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from clothoid import Pose2D, normalize_angle
from config import (
    MESSAGE_BODY_FORMAT, MESSAGE_CRC_FORMAT, MESSAGE_FIELDS, MESSAGE_MAGIC,
    MESSAGE_VERSION, TRAJECTORY_COLUMNS
)
from exceptions import DecodeError, InconsistentPlan, InvalidArgument
from path_planner import ThreeClothoidPath, curvature_at, path_poses, sample_grid
from velocity_planner import (
    MotionPlan, SmoothedVelocityPlan, acceleration_at, smoothing_hosts, times_at, velocity_at
)

logger = logging.getLogger(__name__)

_BODY = struct.Struct(MESSAGE_BODY_FORMAT)
_CRC = struct.Struct(MESSAGE_CRC_FORMAT)
RECORD_SIZE = _BODY.size + _CRC.size


class MotionPlanMessage(BaseModel):
    """
    The transmitted plan: start pose, path shape and velocity plan.

    kp0 and kp2 are not carried; they follow from curvature continuity.
    smooth_a/smooth_b and v_aux1/v_aux2 are interpreted through case_tag.
    jc is the jerk bound the sender smoothed with. The ramps are fixed by
    smooth_a/smooth_b alone, so jc is passed through to the rebuilt plan
    only for the receiver's own jerk checks.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    case_tag: Literal[0, 1, 2, 3]
    x0: float
    y0: float
    psi0: float
    s0: float
    s1: float
    s2: float
    kappa0: float
    kappa1: float
    kappa2: float
    kp1: float
    v0: float
    v_aux1: float
    v_aux2: float
    a0: float
    a1: float
    a2: float
    jc: float
    smooth_a: float
    smooth_b: float

    @classmethod
    def from_plan(cls, path: ThreeClothoidPath, vplan: SmoothedVelocityPlan) -> "MotionPlanMessage":
        if path.lengths != (vplan.s0, vplan.s1, vplan.s2):
            raise InconsistentPlan(
                f"path lengths {path.lengths} differ from velocity plan lengths "
                f"{(vplan.s0, vplan.s1, vplan.s2)}"
            )
        return cls(
            case_tag=vplan.case_tag,
            x0=path.origin.x, y0=path.origin.y, psi0=path.origin.psi,
            s0=path.s0, s1=path.s1, s2=path.s2,
            kappa0=path.kappa0, kappa1=path.kappa1, kappa2=path.kappa2, kp1=path.kp1,
            v0=vplan.v0, v_aux1=vplan.v_aux1, v_aux2=vplan.v_aux2,
            a0=vplan.a0, a1=vplan.a1, a2=vplan.a2,
            jc=vplan.jc, smooth_a=vplan.smooth_a, smooth_b=vplan.smooth_b,
        )

    def values(self) -> tuple:
        """The 19 parameters in wire order."""
        return tuple(getattr(self, name) for name in MESSAGE_FIELDS)

    def to_plan(self) -> MotionPlan:
        """Rebuild path and velocity plan; kp0/kp2 and segment poses are recomputed."""
        path = ThreeClothoidPath.from_parameters(
            Pose2D(self.x0, self.y0, self.psi0), self.s0, self.s1, self.s2,
            self.kappa0, self.kappa1, self.kappa2, self.kp1,
        )
        vplan = SmoothedVelocityPlan(
            self.case_tag, self.v0, self.v_aux1, self.v_aux2, self.a0, self.a1, self.a2,
            self.jc, self.s0, self.s1, self.s2, self.smooth_a, self.smooth_b,
        )
        return MotionPlan(path, vplan)


def pack(message: MotionPlanMessage) -> bytes:
    """Serialize to the fixed 162-byte little-endian record with trailing CRC32."""
    body = _BODY.pack(MESSAGE_MAGIC, MESSAGE_VERSION, message.case_tag, *message.values())
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def _check_invariants(case_tag: int, fields: dict) -> None:
    for name in MESSAGE_FIELDS:
        if not math.isfinite(fields[name]):
            raise DecodeError(name, f"{name} is not finite")
    for name in ("s0", "s2"):
        if fields[name] <= 0:
            raise DecodeError(name, f"{name} must be > 0, got {fields[name]}")
    for name in ("s1", "v0", "v_aux1", "v_aux2", "smooth_a", "smooth_b"):
        if fields[name] < 0:
            raise DecodeError(name, f"{name} < 0 ({fields[name]})")
    if fields["jc"] <= 0:
        raise DecodeError("jc", f"jc must be > 0, got {fields['jc']}")
    if normalize_angle(fields["psi0"]) != fields["psi0"]:
        raise DecodeError("psi0", f"psi0 outside (-pi, pi]: {fields['psi0']}")
    hosts = smoothing_hosts(case_tag, fields["s0"], fields["s1"], fields["s2"], fields["smooth_a"])
    slack = 1e-9 * max(1.0, fields["s0"] + fields["s1"] + fields["s2"])
    for name, host in zip(("smooth_a", "smooth_b"), hosts):
        if fields[name] > host + slack:
            raise DecodeError(name, f"{name}={fields[name]} exceeds its host length {host}")


def unpack(data: bytes) -> MotionPlanMessage:
    """
    Parse and validate a record.

    Raises:
        DecodeError: naming the first failing check (length, magic, version,
            checksum, case_tag, or an invariant-violating field)
    """
    data = bytes(data)
    if len(data) < len(MESSAGE_MAGIC) + 2:
        raise DecodeError("length", f"record has {len(data)} bytes, expected {RECORD_SIZE}")
    if data[:len(MESSAGE_MAGIC)] != MESSAGE_MAGIC:
        raise DecodeError("magic", f"bad magic {data[:len(MESSAGE_MAGIC)]!r}")
    if data[len(MESSAGE_MAGIC)] != MESSAGE_VERSION:
        raise DecodeError("version", f"unsupported version {data[len(MESSAGE_MAGIC)]}")
    if len(data) != RECORD_SIZE:
        raise DecodeError("length", f"record has {len(data)} bytes, expected {RECORD_SIZE}")
    body, (crc,) = data[:_BODY.size], _CRC.unpack(data[_BODY.size:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise DecodeError("checksum", "CRC32 mismatch")

    _, _, case_tag, *values = _BODY.unpack(body)
    if case_tag not in (0, 1, 2, 3):
        raise DecodeError("case_tag", f"unknown case tag {case_tag}")
    fields = dict(zip(MESSAGE_FIELDS, values))
    _check_invariants(case_tag, fields)
    return MotionPlanMessage(case_tag=case_tag, **fields)


def encode(path: ThreeClothoidPath, vplan: SmoothedVelocityPlan) -> bytes:
    return pack(MotionPlanMessage.from_plan(path, vplan))


def decode(data: bytes) -> MotionPlan:
    """Record to path and velocity plan."""
    message = unpack(data)
    try:
        return message.to_plan()
    except InvalidArgument as e:
        raise DecodeError("record", str(e)) from e


def trajectory_frame(plan: MotionPlan, ds: float) -> pd.DataFrame:
    """
    Sample a plan on the path sampling grid.

    Returns:
        DataFrame with columns s, x, y, psi, kappa, v, a, t
    """
    s = sample_grid(plan.path, ds)
    x, y, psi = path_poses(plan.path, s)
    return pd.DataFrame({
        "s": s,
        "x": x,
        "y": y,
        "psi": normalize_angle(psi),
        "kappa": np.asarray(curvature_at(plan.path, s)),
        "v": velocity_at(plan.velocity, s),
        "a": acceleration_at(plan.velocity, s),
        "t": times_at(plan.velocity, s),
    })[TRAJECTORY_COLUMNS]


def reconstruct(message: MotionPlanMessage, ds: float) -> pd.DataFrame:
    """Full trajectory of a message at arclength step `ds`."""
    return trajectory_frame(message.to_plan(), ds)
