"""Robot-side joint inventory: the 20 driven joints and their motion limits.

The limits are the robot's mechanical ranges in radians. Out-of-range
targets are clamped, not rejected: a teleoperated robot has to degrade
gracefully when the human exceeds what the hardware can do.

Note the ankle-roll ranges are identical for both legs even though every
other left/right pair mirrors; that is how the hardware table reads, so
it is transcribed as printed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional


class RobotJointName(str, enum.Enum):
    RIGHT_SHOULDER_PITCH = "right_shoulder_pitch"
    LEFT_SHOULDER_PITCH = "left_shoulder_pitch"
    RIGHT_SHOULDER_ROLL = "right_shoulder_roll"
    LEFT_SHOULDER_ROLL = "left_shoulder_roll"
    RIGHT_ELBOW = "right_elbow"
    LEFT_ELBOW = "left_elbow"
    RIGHT_HIP_YAW = "right_hip_yaw"
    LEFT_HIP_YAW = "left_hip_yaw"
    RIGHT_HIP_PITCH = "right_hip_pitch"
    LEFT_HIP_PITCH = "left_hip_pitch"
    RIGHT_HIP_ROLL = "right_hip_roll"
    LEFT_HIP_ROLL = "left_hip_roll"
    RIGHT_KNEE = "right_knee"
    LEFT_KNEE = "left_knee"
    RIGHT_ANKLE_ROLL = "right_ankle_roll"
    LEFT_ANKLE_ROLL = "left_ankle_roll"
    RIGHT_ANKLE_PITCH = "right_ankle_pitch"
    LEFT_ANKLE_PITCH = "left_ankle_pitch"
    HEAD_YAW = "head_yaw"
    HEAD_PITCH = "head_pitch"

    def __str__(self) -> str:  # keep config/wire names terse
        return self.value


@dataclass(frozen=True)
class JointDescriptor:
    name: RobotJointName
    number: int
    axis_label: str
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError(f"{self.name}: min {self.theta_min} !< max {self.theta_max}")


PI = math.pi

# (joint, number, axis, min, max) in radians.
_LIMITS = (
    (RobotJointName.RIGHT_SHOULDER_PITCH, 1, "Z1", -4 * PI / 3, 4 * PI / 3),
    (RobotJointName.LEFT_SHOULDER_PITCH, 2, "Z1", -4 * PI / 3, 4 * PI / 3),
    (RobotJointName.RIGHT_SHOULDER_ROLL, 3, "Z2", -PI / 2, PI / 2),
    (RobotJointName.LEFT_SHOULDER_ROLL, 4, "Z2", -PI / 2, PI / 2),
    (RobotJointName.RIGHT_ELBOW, 5, "Z3", 0.0, 5 * PI / 6),
    (RobotJointName.LEFT_ELBOW, 6, "Z3", -5 * PI / 6, 0.0),
    (RobotJointName.RIGHT_HIP_YAW, 7, "Z1", -5 * PI / 6, PI / 4),
    (RobotJointName.LEFT_HIP_YAW, 8, "Z1", -PI / 4, 5 * PI / 6),
    (RobotJointName.RIGHT_HIP_PITCH, 9, "Z3", -PI / 2, PI / 6),
    (RobotJointName.LEFT_HIP_PITCH, 10, "Z3", -PI / 6, PI / 2),
    (RobotJointName.RIGHT_HIP_ROLL, 11, "Z2", 0.0, PI / 3),
    (RobotJointName.LEFT_HIP_ROLL, 12, "Z2", -PI / 3, 0.0),
    (RobotJointName.RIGHT_KNEE, 13, "Z4", 0.0, 3 * PI / 4),
    (RobotJointName.LEFT_KNEE, 14, "Z4", -3 * PI / 4, 0.0),
    (RobotJointName.RIGHT_ANKLE_ROLL, 15, "Z6", -PI / 6, PI / 3),
    (RobotJointName.LEFT_ANKLE_ROLL, 16, "Z6", -PI / 6, PI / 3),
    (RobotJointName.RIGHT_ANKLE_PITCH, 17, "Z5", -PI / 3, PI / 3),
    (RobotJointName.LEFT_ANKLE_PITCH, 18, "Z5", -PI / 3, PI / 3),
    (RobotJointName.HEAD_YAW, 19, "Z1", -5 * PI / 6, 5 * PI / 6),
    (RobotJointName.HEAD_PITCH, 20, "Z2", -PI / 3, PI / 6),
)

UPPER_BODY_JOINTS = (
    RobotJointName.RIGHT_SHOULDER_PITCH,
    RobotJointName.LEFT_SHOULDER_PITCH,
    RobotJointName.RIGHT_SHOULDER_ROLL,
    RobotJointName.LEFT_SHOULDER_ROLL,
    RobotJointName.RIGHT_ELBOW,
    RobotJointName.LEFT_ELBOW,
    RobotJointName.HEAD_YAW,
    RobotJointName.HEAD_PITCH,
)

LEG_JOINTS = tuple(
    j for (j, *_rest) in _LIMITS if j not in UPPER_BODY_JOINTS
)

# Left/right joint pairs whose ranges mirror (negate) each other. Ankle
# roll is deliberately absent: the hardware table gives both legs the
# same asymmetric range.
MIRRORED_PAIRS = (
    (RobotJointName.RIGHT_SHOULDER_PITCH, RobotJointName.LEFT_SHOULDER_PITCH),
    (RobotJointName.RIGHT_SHOULDER_ROLL, RobotJointName.LEFT_SHOULDER_ROLL),
    (RobotJointName.RIGHT_ELBOW, RobotJointName.LEFT_ELBOW),
    (RobotJointName.RIGHT_HIP_YAW, RobotJointName.LEFT_HIP_YAW),
    (RobotJointName.RIGHT_HIP_PITCH, RobotJointName.LEFT_HIP_PITCH),
    (RobotJointName.RIGHT_HIP_ROLL, RobotJointName.LEFT_HIP_ROLL),
    (RobotJointName.RIGHT_KNEE, RobotJointName.LEFT_KNEE),
    (RobotJointName.RIGHT_ANKLE_PITCH, RobotJointName.LEFT_ANKLE_PITCH),
)


class LimitsTable:
    """Immutable lookup over the 20 joint descriptors."""

    def __init__(self, descriptors: Iterable[JointDescriptor]):
        self._by_name: Dict[RobotJointName, JointDescriptor] = {}
        for d in descriptors:
            if d.name in self._by_name:
                raise ValueError(f"duplicate joint {d.name}")
            self._by_name[d.name] = d
        numbers = sorted(d.number for d in self._by_name.values())
        if len(self._by_name) != 20 or numbers != list(range(1, 21)):
            raise ValueError("limits table must cover joints numbered 1..20 exactly")

    def __iter__(self):
        return iter(self._by_name.values())

    def __len__(self) -> int:
        return len(self._by_name)

    def descriptor(self, joint: RobotJointName) -> JointDescriptor:
        return self._by_name[joint]

    def clamp(self, joint: RobotJointName, angle: float) -> float:
        if not math.isfinite(angle):
            raise ValueError(f"{joint}: angle {angle!r} not finite")
        d = self._by_name[joint]
        return min(max(angle, d.theta_min), d.theta_max)

    def in_range(self, joint: RobotJointName, angle: float, tol: float = 0.0) -> bool:
        d = self._by_name[joint]
        return d.theta_min - tol <= angle <= d.theta_max + tol


_DEFAULT_TABLE = LimitsTable(
    JointDescriptor(name, number, axis, lo, hi)
    for (name, number, axis, lo, hi) in _LIMITS
)


def limits_table() -> List[JointDescriptor]:
    """All 20 descriptors in joint-number order."""
    return sorted(_DEFAULT_TABLE, key=lambda d: d.number)


def default_table() -> LimitsTable:
    return _DEFAULT_TABLE


def clamp_to_limits(
    joint: RobotJointName, angle: float, table: Optional[LimitsTable] = None
) -> float:
    return (table or _DEFAULT_TABLE).clamp(joint, angle)


@dataclass(frozen=True)
class JointAngleSet:
    """Target angles for some or all robot joints, radians."""

    stamp_us: int
    angles: Mapping[RobotJointName, float] = field(default_factory=dict)

    def validate(self, table: Optional[LimitsTable] = None, tol: float = 1e-9) -> None:
        tbl = table or _DEFAULT_TABLE
        for joint, angle in self.angles.items():
            if not tbl.in_range(joint, angle, tol=tol):
                d = tbl.descriptor(joint)
                raise ValueError(
                    f"{joint} = {angle} outside [{d.theta_min}, {d.theta_max}]"
                )


def neutral_pose(stamp_us: int = 0, table: Optional[LimitsTable] = None) -> JointAngleSet:
    """Standing pose: 0 whenever the range admits it, else the midpoint."""
    tbl = table or _DEFAULT_TABLE
    angles: Dict[RobotJointName, float] = {}
    for d in sorted(tbl, key=lambda d: d.number):
        if d.theta_min <= 0.0 <= d.theta_max:
            angles[d.name] = 0.0
        else:
            angles[d.name] = (d.theta_min + d.theta_max) / 2.0
    return JointAngleSet(stamp_us=stamp_us, angles=angles)
