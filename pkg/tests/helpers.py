"""Frame builders shared across the test suite."""

from __future__ import annotations

import random
from typing import Dict, Mapping, Optional, Tuple

from teleop.skeleton import (
    SKELETON_JOINTS,
    JointSample,
    Point3,
    Quaternion,
    SkeletonFrame,
)

# The same standing pose the synthetic scenarios start from.
TEMPLATE: Mapping[str, Tuple[float, float, float]] = {
    "head": (0.0, 1.65, 2.0),
    "neck": (0.0, 1.5, 2.0),
    "torso": (0.0, 1.2, 2.0),
    "right_shoulder": (0.2, 1.45, 2.0),
    "left_shoulder": (-0.2, 1.45, 2.0),
    "right_elbow": (0.25, 1.15, 2.0),
    "left_elbow": (-0.25, 1.15, 2.0),
    "right_hand": (0.25, 0.85, 2.0),
    "left_hand": (-0.25, 0.85, 2.0),
    "right_hip": (0.12, 0.95, 2.0),
    "left_hip": (-0.12, 0.95, 2.0),
    "right_knee": (0.12, 0.5, 2.0),
    "left_knee": (-0.12, 0.5, 2.0),
    "right_foot": (0.12, 0.05, 2.0),
    "left_foot": (-0.12, 0.05, 2.0),
}


def make_frame(
    stamp_us: int = 0,
    moves: Optional[Mapping[str, Tuple[float, float, float]]] = None,
    torso_yaw: float = 0.0,
    confidences: Optional[Mapping[str, float]] = None,
) -> SkeletonFrame:
    """Standing template with selected joints moved or deconfident."""
    positions: Dict[str, Tuple[float, float, float]] = dict(TEMPLATE)
    if moves:
        positions.update(moves)
    joints = {}
    for name in SKELETON_JOINTS:
        x, y, z = positions[name]
        orientation = (
            Quaternion.from_y_rotation(torso_yaw) if name == "torso" else Quaternion.identity()
        )
        conf = confidences.get(name, 1.0) if confidences else 1.0
        joints[name] = JointSample(
            position=Point3(x, y, z), orientation=orientation, confidence=conf
        )
    return SkeletonFrame(stamp_us=stamp_us, joints=joints)


def random_frame(rng: random.Random, stamp_us: int, wobble: float = 0.4) -> SkeletonFrame:
    """Template plus bounded positional noise; random orientations and confidences."""
    joints = {}
    for name in SKELETON_JOINTS:
        x, y, z = TEMPLATE[name]
        pos = Point3(
            x + rng.uniform(-wobble, wobble),
            y + rng.uniform(-wobble, wobble),
            z + rng.uniform(-wobble, wobble),
        )
        q = Quaternion(
            rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)
        )
        if q.norm() < 1e-3:
            q = Quaternion.identity()
        joints[name] = JointSample(
            position=pos, orientation=q, confidence=rng.random()
        )
    return SkeletonFrame(stamp_us=stamp_us, joints=joints)
