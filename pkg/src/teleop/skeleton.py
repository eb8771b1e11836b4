"""Human-side data model: tracked skeleton frames and their geometry.

Coordinate convention (fixed for the whole package): right-handed frame
with +x = operator's right (the operator faces the sensor), +y = up,
+z = away from the sensor. A larger z means farther from the sensor,
i.e. "deeper".

Angle convention: three collinear points read as a straight limb and
give angle 0; a fully folded limb gives pi. All angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

SKELETON_JOINTS = (
    "head",
    "neck",
    "torso",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_hand",
    "right_hand",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_foot",
    "right_foot",
)

# Below this norm a limb segment is treated as collapsed (sensor glitch).
SEGMENT_EPS = 1e-6
# Joints reported below this confidence are stale and must be held.
CONFIDENCE_STALE = 0.5


class DegenerateSegment(ValueError):
    """Two skeleton points coincide; the angle between them is undefined."""


class DegenerateQuaternion(ValueError):
    """Quaternion norm is too close to zero to normalize."""


class MissingJoint(KeyError):
    """A required joint has no confident sample and no held history."""


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} component not finite: {v!r}")


@dataclass(frozen=True)
class Point3:
    """A tracked location in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _check_finite("Point3", self.x, self.y, self.z)


@dataclass(frozen=True)
class Vec3:
    """A displacement in meters."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        _check_finite("Vec3", self.dx, self.dy, self.dz)

    def norm(self) -> float:
        return math.sqrt(self.dx * self.dx + self.dy * self.dy + self.dz * self.dz)

    def dot(self, other: "Vec3") -> float:
        return self.dx * other.dx + self.dy * other.dy + self.dz * other.dz

    def __neg__(self) -> "Vec3":
        return Vec3(-self.dx, -self.dy, -self.dz)


@dataclass(frozen=True)
class Quaternion:
    """Rotation as (w, x, y, z). Stored as given; normalize on use."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        _check_finite("Quaternion", self.w, self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n <= 1e-9:
            raise DegenerateQuaternion(f"quaternion norm {n!r} too small")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_y_rotation(angle: float) -> "Quaternion":
        """Rotation by `angle` about the vertical (+y) axis."""
        half = angle / 2.0
        return Quaternion(math.cos(half), 0.0, math.sin(half), 0.0)


@dataclass(frozen=True)
class JointSample:
    """One joint's tracked position, orientation and tracking confidence."""

    position: Point3
    orientation: Quaternion
    confidence: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence!r} outside [0, 1]")


@dataclass(frozen=True)
class SkeletonFrame:
    """One timestamped human pose with exactly the 15 canonical joints."""

    stamp_us: int
    joints: Mapping[str, JointSample] = field(default_factory=dict)

    def __post_init__(self):
        names = set(self.joints)
        expected = set(SKELETON_JOINTS)
        if names != expected:
            missing = sorted(expected - names)
            extra = sorted(names - expected)
            raise ValueError(
                f"frame must carry the 15 canonical joints; missing={missing} extra={extra}"
            )


JointMap = Mapping[str, JointSample]
FrameLike = Union[SkeletonFrame, JointMap]


def frame_joints(frame: FrameLike) -> JointMap:
    """Accept either a full frame or a plain joint mapping."""
    if isinstance(frame, SkeletonFrame):
        return frame.joints
    return frame


def joint_position(frame: FrameLike, name: str) -> Point3:
    joints = frame_joints(frame)
    try:
        return joints[name].position
    except KeyError:
        raise MissingJoint(name) from None


def vector_between(a: Point3, b: Point3) -> Vec3:
    """Displacement from b to a, componentwise a - b."""
    return Vec3(a.x - b.x, a.y - b.y, a.z - b.z)


def joint_angle(a: Point3, b: Point3, c: Point3) -> float:
    """Angle in [0, pi] between segments (a - b) and (b - c).

    Straight limbs (b between a and c) give 0; a fully folded limb gives
    pi. Raises DegenerateSegment when either segment collapses below
    SEGMENT_EPS; the caller is expected to reuse its previous angle.
    """
    ab = vector_between(a, b)
    bc = vector_between(b, c)
    nab = ab.norm()
    nbc = bc.norm()
    if nab <= SEGMENT_EPS or nbc <= SEGMENT_EPS:
        raise DegenerateSegment(f"segment norms {nab:.3e}, {nbc:.3e}")
    ratio = ab.dot(bc) / (nab * nbc)
    # Floating-point dot products overshoot the bound by ~1e-16 and
    # would turn acos into NaN.
    ratio = max(-1.0, min(1.0, ratio))
    return math.acos(ratio)


def quaternion_to_yaw(q: Quaternion) -> float:
    """Rotation about +y in (-pi, pi], yaw extracted first.

    Positive yaw means the operator twists toward their left. Uses the
    rotated +z basis vector: yaw = atan2(R02, R22).
    """
    qn = q.normalized()
    r02 = 2.0 * (qn.x * qn.z + qn.w * qn.y)
    r22 = 1.0 - 2.0 * (qn.x * qn.x + qn.y * qn.y)
    yaw = math.atan2(r02, r22)
    if yaw == -math.pi:
        yaw = math.pi
    return yaw


class StaleJointFilter:
    """Holds the last confident sample for each joint.

    The tracker reports a confidence for every joint; anything below
    CONFIDENCE_STALE is replaced by the most recent confident sample.
    Joints that were never confident are omitted from the output, which
    downstream code surfaces as MissingJoint.
    """

    def __init__(self, threshold: float = CONFIDENCE_STALE):
        self.threshold = threshold
        self._held: dict[str, JointSample] = {}

    def apply(self, frame: SkeletonFrame) -> dict[str, JointSample]:
        effective: dict[str, JointSample] = {}
        for name, sample in frame.joints.items():
            if sample.confidence >= self.threshold:
                self._held[name] = sample
                effective[name] = sample
            elif name in self._held:
                effective[name] = self._held[name]
        return effective

    def reset(self) -> None:
        self._held.clear()


def validate_frame_stream(frames: Iterable[SkeletonFrame]) -> int:
    """Check stamps strictly increase; returns the frame count."""
    last = None
    count = 0
    for frame in frames:
        if last is not None and frame.stamp_us <= last:
            raise ValueError(
                f"frame {count + 1}: stamp {frame.stamp_us} not after {last}"
            )
        last = frame.stamp_us
        count += 1
    return count
