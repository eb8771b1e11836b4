"""Upper-body retargeting: skeleton frame -> the six arm joint targets.

Per arm:
  elbow          three-point angle shoulder/elbow/hand; the left value is
                 negated to land in the robot's mirrored range.
  shoulder pitch signed angle of the shoulder->elbow vector projected on
                 the sagittal (y-z) plane, measured from straight down;
                 positive swings the arm forward (toward the sensor).
  shoulder roll  asin of the x component of the unit shoulder->elbow
                 vector; raising the right arm sideways is positive.

When the arm points straight sideways the sagittal projection collapses
and pitch is held at its previous value; each retargeter instance keeps
that one piece of memory per arm and is not meant to be shared across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .robot import JointAngleSet, LimitsTable, RobotJointName, default_table
from .skeleton import (
    FrameLike,
    SkeletonFrame,
    frame_joints,
    joint_angle,
    joint_position,
    vector_between,
)

# Below this sagittal-projection norm the pitch is singular (arm along x).
PITCH_SINGULAR_EPS = 1e-6


@dataclass(frozen=True)
class UpperBodyAngles:
    """Arm joint targets, already clamped to the robot's limits."""

    stamp_us: int
    shoulder_pitch_r: float
    shoulder_pitch_l: float
    shoulder_roll_r: float
    shoulder_roll_l: float
    elbow_r: float
    elbow_l: float

    def as_angle_set(self, include_head: bool = True) -> JointAngleSet:
        angles: Dict[RobotJointName, float] = {
            RobotJointName.RIGHT_SHOULDER_PITCH: self.shoulder_pitch_r,
            RobotJointName.LEFT_SHOULDER_PITCH: self.shoulder_pitch_l,
            RobotJointName.RIGHT_SHOULDER_ROLL: self.shoulder_roll_r,
            RobotJointName.LEFT_SHOULDER_ROLL: self.shoulder_roll_l,
            RobotJointName.RIGHT_ELBOW: self.elbow_r,
            RobotJointName.LEFT_ELBOW: self.elbow_l,
        }
        if include_head:
            yaw, pitch = head_angles(None)
            angles[RobotJointName.HEAD_YAW] = yaw
            angles[RobotJointName.HEAD_PITCH] = pitch
        return JointAngleSet(stamp_us=self.stamp_us, angles=angles)


def head_angles(frame: Optional[FrameLike]) -> Tuple[float, float]:
    """Head is held neutral; the pipeline still emits the full command."""
    return (0.0, 0.0)


class UpperBodyRetargeter:
    def __init__(self, table: Optional[LimitsTable] = None):
        self._table = table or default_table()
        self._held_pitch = {"right": 0.0, "left": 0.0}

    def reset(self) -> None:
        self._held_pitch = {"right": 0.0, "left": 0.0}

    def _arm(self, joints, side: str) -> Tuple[float, float, float]:
        shoulder = joint_position(joints, f"{side}_shoulder")
        elbow = joint_position(joints, f"{side}_elbow")
        hand = joint_position(joints, f"{side}_hand")

        bend = joint_angle(shoulder, elbow, hand)

        # joint_angle has already rejected a collapsed upper arm, so the
        # norm here is safely above the segment epsilon.
        upper = vector_between(elbow, shoulder)
        n = upper.norm()
        sag = math.hypot(upper.dy, upper.dz)
        if sag < PITCH_SINGULAR_EPS:
            pitch = self._held_pitch[side]
        else:
            pitch = math.atan2(-upper.dz, -upper.dy)
            self._held_pitch[side] = pitch

        roll = math.asin(max(-1.0, min(1.0, upper.dx / n)))
        return pitch, roll, bend

    def retarget(self, frame: FrameLike) -> UpperBodyAngles:
        """Map one frame to clamped arm targets.

        Raises MissingJoint if a required joint is absent and
        DegenerateSegment if a limb segment has collapsed; the caller is
        expected to hold its previous output for that frame.
        """
        joints = frame_joints(frame)
        stamp = frame.stamp_us if isinstance(frame, SkeletonFrame) else 0

        pitch_r, roll_r, bend_r = self._arm(joints, "right")
        pitch_l, roll_l, bend_l = self._arm(joints, "left")

        clamp = self._table.clamp
        return UpperBodyAngles(
            stamp_us=stamp,
            shoulder_pitch_r=clamp(RobotJointName.RIGHT_SHOULDER_PITCH, pitch_r),
            shoulder_pitch_l=clamp(RobotJointName.LEFT_SHOULDER_PITCH, pitch_l),
            shoulder_roll_r=clamp(RobotJointName.RIGHT_SHOULDER_ROLL, roll_r),
            shoulder_roll_l=clamp(RobotJointName.LEFT_SHOULDER_ROLL, roll_l),
            elbow_r=clamp(RobotJointName.RIGHT_ELBOW, bend_r),
            elbow_l=clamp(RobotJointName.LEFT_ELBOW, -bend_l),
        )


def retarget_upper_body(
    frame: FrameLike, table: Optional[LimitsTable] = None
) -> UpperBodyAngles:
    """One-shot retarget with no singular-hold memory."""
    return UpperBodyRetargeter(table).retarget(frame)
