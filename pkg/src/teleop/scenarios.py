"""Synthetic operator streams with analytically known properties.

Each scenario builds frames from a fixed standing template plus a small
parametric model, so the interesting quantities (knee bend, knee depth,
torso yaw) cross the gait thresholds at frame instants that can be
computed by hand. Tests rely on that: the generators are the ground
truth the pipeline is checked against.

Conventions match the skeleton model: +x operator's right, +y up, +z
away from the sensor; the operator faces the sensor, so stepping
forward moves a joint toward smaller z.

Arm poses are parametrized by the same (pitch, roll, bend) the
retargeting stage extracts, legs by thigh tilt alpha (positive tilts
the knee toward the sensor) and knee bend beta; the knee angle a frame
produces equals beta exactly and the knee depth is 2.0 - 0.45*sin(alpha).
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from .skeleton import JointSample, Point3, Quaternion, SkeletonFrame
from .streams import write_stream

SCENARIOS = ("idle", "arm_wave", "forward_step", "backward_step", "turn")

_UPPER_ARM_M = 0.3
_FOREARM_M = 0.3
_THIGH_M = 0.45
_SHIN_M = 0.45


class UnknownScenario(ValueError):
    """Scenario name is not one of SCENARIOS."""


def _template() -> Dict[str, Point3]:
    return {
        "head": Point3(0.0, 1.65, 2.0),
        "neck": Point3(0.0, 1.5, 2.0),
        "torso": Point3(0.0, 1.2, 2.0),
        "right_shoulder": Point3(0.2, 1.45, 2.0),
        "left_shoulder": Point3(-0.2, 1.45, 2.0),
        "right_elbow": Point3(0.25, 1.15, 2.0),
        "left_elbow": Point3(-0.25, 1.15, 2.0),
        "right_hand": Point3(0.25, 0.85, 2.0),
        "left_hand": Point3(-0.25, 0.85, 2.0),
        "right_hip": Point3(0.12, 0.95, 2.0),
        "left_hip": Point3(-0.12, 0.95, 2.0),
        "right_knee": Point3(0.12, 0.5, 2.0),
        "left_knee": Point3(-0.12, 0.5, 2.0),
        "right_foot": Point3(0.12, 0.05, 2.0),
        "left_foot": Point3(-0.12, 0.05, 2.0),
    }


def _smoothstep(u: float) -> float:
    u = min(max(u, 0.0), 1.0)
    return u * u * (3.0 - 2.0 * u)


def _ramp(t: float, t0: float, t1: float, a: float, b: float) -> float:
    """Smooth interpolation from a to b as t runs t0..t1, clamped outside."""
    if t1 <= t0:
        return b
    return a + (b - a) * _smoothstep((t - t0) / (t1 - t0))


def _arm_positions(
    shoulder: Point3, pitch: float, roll: float, bend: float
) -> Tuple[Point3, Point3]:
    """Elbow and hand realizing the given retarget angles exactly."""
    ux = math.sin(roll)
    uy = -math.cos(roll) * math.cos(pitch)
    uz = -math.cos(roll) * math.sin(pitch)
    elbow = Point3(
        shoulder.x + _UPPER_ARM_M * ux,
        shoulder.y + _UPPER_ARM_M * uy,
        shoulder.z + _UPPER_ARM_M * uz,
    )
    # fold in the plane spanned by the upper arm and u x x_hat; any
    # perpendicular would do, the bend angle comes out the same
    wx, wy, wz = 0.0, uz, -uy
    wn = math.hypot(wy, wz)
    wy, wz = wy / wn, wz / wn
    fx = ux * math.cos(bend) + wx * math.sin(bend)
    fy = uy * math.cos(bend) + wy * math.sin(bend)
    fz = uz * math.cos(bend) + wz * math.sin(bend)
    hand = Point3(
        elbow.x + _FOREARM_M * fx,
        elbow.y + _FOREARM_M * fy,
        elbow.z + _FOREARM_M * fz,
    )
    return elbow, hand


def _leg_positions(hip: Point3, alpha: float, beta: float) -> Tuple[Point3, Point3]:
    """Knee and foot: thigh tilted alpha toward the sensor, knee bent beta."""
    knee = Point3(
        hip.x,
        hip.y - _THIGH_M * math.cos(alpha),
        hip.z - _THIGH_M * math.sin(alpha),
    )
    shin = alpha - beta
    foot = Point3(
        knee.x,
        knee.y - _SHIN_M * math.cos(shin),
        knee.z - _SHIN_M * math.sin(shin),
    )
    return knee, foot


def _frame(
    stamp_us: int, positions: Dict[str, Point3], torso_yaw: float = 0.0
) -> SkeletonFrame:
    joints = {}
    for name, pos in positions.items():
        orientation = (
            Quaternion.from_y_rotation(torso_yaw)
            if name == "torso"
            else Quaternion.identity()
        )
        joints[name] = JointSample(position=pos, orientation=orientation, confidence=1.0)
    return SkeletonFrame(stamp_us=stamp_us, joints=joints)


def _step_profile(t: float, alpha_lift: float, alpha_place: float) -> Tuple[float, float]:
    """(alpha, beta) over the one-step timeline shared by both step scenarios.

    Standing until 0.5 s, lift until 1.1 s (bend rises to 0.9, crossing
    the 0.7 lift threshold), placing until 1.7 s (bend falls to 0.28,
    crossing the 0.5 place threshold), then holding. The thigh tilt
    follows the bend to alpha_lift during the lift and moves to
    alpha_place while placing, which controls the knee depth at the
    placement instant and hence the step direction.
    """
    if t < 0.5:
        return 0.0, 0.0
    if t < 1.1:
        beta = _ramp(t, 0.5, 1.1, 0.0, 0.9)
        return alpha_lift * beta / 0.9, beta
    if t < 1.7:
        return (
            _ramp(t, 1.1, 1.7, alpha_lift, alpha_place),
            _ramp(t, 1.1, 1.7, 0.9, 0.28),
        )
    return alpha_place, 0.28


def synth_frames(
    scenario: str,
    duration_s: Optional[float] = None,
    frame_rate_hz: float = 20.0,
    turn_angle: float = 0.6,
) -> List[SkeletonFrame]:
    """Generate one scenario's frames; raises UnknownScenario."""
    if scenario not in SCENARIOS:
        raise UnknownScenario(f"unknown scenario {scenario!r}; know {SCENARIOS}")
    if frame_rate_hz <= 0:
        raise ValueError("frame_rate_hz must be positive")

    if duration_s is None:
        duration_s = {
            "idle": 2.0,
            "arm_wave": 2.0,
            "forward_step": 3.0,
            "backward_step": 3.0,
        }.get(scenario)
        if duration_s is None:  # turn: leave room for every planned step
            steps = max(1, math.ceil(abs(turn_angle) / 0.26))
            duration_s = 2.0 + 0.7 * steps
    count = max(1, int(round(duration_s * frame_rate_hz)))

    frames: List[SkeletonFrame] = []
    for i in range(count):
        t = i / frame_rate_hz
        stamp_us = round(i * 1_000_000 / frame_rate_hz)
        positions = _template()
        yaw = 0.0

        if scenario == "arm_wave":
            r_pitch = 0.0
            r_roll = 0.6 - 0.5 * math.cos(math.pi * t)
            r_bend = 0.4 - 0.4 * math.cos(math.pi * t)
            positions["right_elbow"], positions["right_hand"] = _arm_positions(
                positions["right_shoulder"], r_pitch, r_roll, r_bend
            )
            l_pitch = 0.7 * math.sin(math.pi * t)
            positions["left_elbow"], positions["left_hand"] = _arm_positions(
                positions["left_shoulder"], l_pitch, -0.15, 0.05
            )
        elif scenario == "forward_step":
            alpha, beta = _step_profile(t, alpha_lift=0.45, alpha_place=0.3398)
            positions["right_knee"], positions["right_foot"] = _leg_positions(
                positions["right_hip"], alpha, beta
            )
        elif scenario == "backward_step":
            alpha, beta = _step_profile(t, alpha_lift=0.15, alpha_place=-0.45)
            positions["right_knee"], positions["right_foot"] = _leg_positions(
                positions["right_hip"], alpha, beta
            )
        elif scenario == "turn":
            yaw = _ramp(t, 0.5, 1.1, 0.0, turn_angle)

        frames.append(_frame(stamp_us, positions, torso_yaw=yaw))
    return frames


def synth_stream(
    scenario: str,
    destination,
    duration_s: Optional[float] = None,
    frame_rate_hz: float = 20.0,
    turn_angle: float = 0.6,
) -> int:
    """Generate a scenario straight into a stream file; returns frame count."""
    frames = synth_frames(
        scenario, duration_s=duration_s, frame_rate_hz=frame_rate_hz, turn_angle=turn_angle
    )
    return write_stream(destination, frames, frame_rate_hz=frame_rate_hz)
