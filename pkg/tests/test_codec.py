import math
import struct
import zlib

import numpy as np
import pandas as pd
import pytest

from codec import (
    RECORD_SIZE, MotionPlanMessage, decode, encode, pack, reconstruct, trajectory_frame, unpack
)
from config import MESSAGE_BODY_FORMAT, MESSAGE_FIELDS, MESSAGE_MAGIC, MESSAGE_VERSION
from exceptions import CloplanError, DecodeError, InconsistentPlan
from path_planner import PathBoundaryCondition, solve_g2
from velocity_planner import constant_accel_plan, jerk_smooth, plan_motion, velocity_at


def _seal(case_tag, values, magic=MESSAGE_MAGIC, version=MESSAGE_VERSION):
    body = struct.Struct(MESSAGE_BODY_FORMAT).pack(magic, version, case_tag, *values)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


@pytest.fixture(scope="module")
def message(left_turn_plan):
    return MotionPlanMessage.from_plan(left_turn_plan.path, left_turn_plan.velocity)


def test_record_layout(message):
    record = pack(message)
    assert RECORD_SIZE == 162
    assert len(record) == RECORD_SIZE
    assert record[:4] == b"CLO1"
    assert record[4] == 1
    assert record[5] == message.case_tag


def test_record_round_trip_is_bit_exact(message):
    record = pack(message)
    assert unpack(record) == message
    assert pack(unpack(record)) == record


def test_receiver_rebuilds_sender_trajectory(left_turn_plan, message):
    sent = trajectory_frame(left_turn_plan, 0.1)
    received = reconstruct(unpack(pack(message)), 0.1)
    pd.testing.assert_frame_equal(sent, received, check_exact=False, rtol=0, atol=1e-12)
    assert received["x"].iloc[-1] == pytest.approx(14.5, abs=1e-6)
    assert received["y"].iloc[-1] == pytest.approx(21.5, abs=1e-6)


def test_decode_returns_motion_plan(left_turn_plan):
    plan = decode(encode(left_turn_plan.path, left_turn_plan.velocity))
    assert plan.path == left_turn_plan.path
    assert plan.velocity.case_tag == left_turn_plan.velocity.case_tag


def test_json_mirror(message):
    restored = MotionPlanMessage.model_validate_json(message.model_dump_json())
    assert restored == message
    assert tuple(restored.values()) == tuple(getattr(message, f) for f in MESSAGE_FIELDS)


@pytest.mark.parametrize("mutate, field", [
    (lambda r: b"XXXX" + r[4:], "magic"),
    (lambda r: r[:4] + bytes([2]) + r[5:], "version"),
    (lambda r: r[:100], "length"),
    (lambda r: r + b"\x00", "length"),
    (lambda r: r[:40] + bytes([r[40] ^ 0x01]) + r[41:], "checksum"),
    (lambda r: r[:3], "length"),
])
def test_header_errors(message, mutate, field):
    with pytest.raises(DecodeError) as info:
        unpack(mutate(pack(message)))
    assert info.value.field == field


def test_random_corruption_is_always_detected(message):
    record = pack(message)
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        corrupted = bytearray(record)
        for pos in rng.choice(RECORD_SIZE, size=int(rng.integers(1, 4)), replace=False):
            corrupted[pos] ^= int(rng.integers(1, 256))
        with pytest.raises(DecodeError) as info:
            unpack(bytes(corrupted))
        assert info.value.field in ("magic", "version", "checksum")


def test_jerk_bound_travels_with_the_plan(left_turn_path, limits):
    raw = constant_accel_plan(left_turn_path, 5.0, limits)
    sent = jerk_smooth(raw, left_turn_path, limits, jc=4.0)
    received = decode(encode(left_turn_path, sent)).velocity
    assert received.jc == 4.0
    assert received.pieces.jerk_s.tolist() == sent.pieces.jerk_s.tolist()

    table = received.pieces
    s = np.linspace(0.0, received.s_f, 5001)
    jerk = np.abs(table.jerk_s[np.searchsorted(table.start, s, side="right") - 1]) * velocity_at(received, s)
    assert np.max(jerk) <= received.jc + 1e-9


def test_unknown_case_tag(message):
    with pytest.raises(DecodeError) as info:
        unpack(_seal(9, message.values()))
    assert info.value.field == "case_tag"


@pytest.mark.parametrize("name, value", [
    ("s0", -1.0),
    ("s2", 0.0),
    ("v0", -0.5),
    ("jc", 0.0),
    ("psi0", 4.0),
    ("kappa1", math.nan),
    ("a2", math.inf),
])
def test_invariant_violations_name_the_field(message, name, value):
    values = dict(zip(MESSAGE_FIELDS, message.values()))
    values[name] = value
    with pytest.raises(DecodeError) as info:
        unpack(_seal(message.case_tag, [values[f] for f in MESSAGE_FIELDS]))
    assert info.value.field == name


def test_smoothing_longer_than_host_is_rejected(message):
    values = dict(zip(MESSAGE_FIELDS, message.values()))
    values["smooth_a"] = values["s0"] + values["s1"] + values["s2"]
    with pytest.raises(DecodeError) as info:
        unpack(_seal(message.case_tag, [values[f] for f in MESSAGE_FIELDS]))
    assert info.value.field in ("smooth_a", "smooth_b")


def test_mismatched_lengths_are_inconsistent(left_turn_plan):
    other = solve_g2(PathBoundaryCondition(14.5, 21.5, math.pi / 2), 4.0, 6.0)
    with pytest.raises(InconsistentPlan):
        MotionPlanMessage.from_plan(other, left_turn_plan.velocity)


@pytest.mark.slow
def test_random_plans_survive_the_wire(limits):
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(60):
        bc = PathBoundaryCondition(rng.uniform(12, 30), rng.uniform(12, 30), math.pi / 2)
        try:
            path = solve_g2(bc, 5.0, 5.0)
            plan = plan_motion(path, rng.uniform(0.5, 3.0), limits)
        except CloplanError:
            continue
        record = encode(plan.path, plan.velocity)
        assert pack(unpack(record)) == record
        pd.testing.assert_frame_equal(trajectory_frame(plan, 0.5), trajectory_frame(decode(record), 0.5),
                                      check_exact=False, rtol=0, atol=1e-12)
        checked += 1
    assert checked >= 10
