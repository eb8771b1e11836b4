"""
Three-point joint angles
========================

"""

import math

from teleop.skeleton import DegenerateSegment, Point3, joint_angle

# A bending elbow. The upper arm runs shoulder -> elbow along +x; the
# forearm swings through the fold angle. A straight arm reads 0, a fully
# folded one reads pi, and the reading is exactly the fold we dialed in.
shoulder = Point3(0.2, 1.4, 2.0)
elbow = Point3(0.5, 1.4, 2.0)

print("fold (deg)   joint_angle (rad)")
for fold_deg in (0, 30, 90, 150, 180):
    fold = math.radians(fold_deg)
    hand = Point3(
        elbow.x + 0.3 * math.cos(fold),
        elbow.y + 0.3 * math.sin(fold),
        elbow.z,
    )
    bend = joint_angle(shoulder, elbow, hand)
    print(f"{fold_deg:10d}   {bend:.9f}")


# The angle is a property of the body, not of the room: rotate the whole
# construction about z, double its size, and carry it somewhere else;
# the reading does not move.
def elsewhere(p):
    c, s = math.cos(0.7), math.sin(0.7)
    return Point3(
        2.0 * (c * p.x - s * p.y) + 4.0,
        2.0 * (s * p.x + c * p.y) - 1.0,
        2.0 * p.z + 3.0,
    )


hand = Point3(elbow.x, elbow.y + 0.3, elbow.z)
here = joint_angle(shoulder, elbow, hand)
there = joint_angle(elsewhere(shoulder), elsewhere(elbow), elsewhere(hand))
print(f"\nsame pose, moved and scaled: {here:.12f} vs {there:.12f}")

# Collapsed segments have no direction, so they are refused rather than
# silently read as some arbitrary angle.
try:
    joint_angle(shoulder, elbow, elbow)
except DegenerateSegment as err:
    print(f"\ncollapsed forearm: {err}")
