"""
Gait events for a step and a turn
=================================

"""

import math

from teleop.pipeline import run_frames
from teleop.scenarios import synth_frames

# Feed a synthetic forward step through the arbiter and read the gait
# log. The knee lifting past one threshold arms the step; placing below
# the other one fires it, and a canned three-keyframe motion plays out.
print("forward step")
print("------------")
for topic, message in run_frames(synth_frames("forward_step")):
    if topic != "gait_events":
        continue
    t = message.stamp_us / 1e6
    extra = ""
    if message.event == "step":
        extra = f"  leg={message.leg} decision={message.decision}"
    if message.event in ("motion_finished", "locomotion_started"):
        extra = f"  motion={message.motion}"
    print(f"{t:7.2f}s  {message.event}{extra}")

# Turning works the same way but is driven by torso yaw. The commanded
# rotation is quantized to whole turn steps, so 100 degrees of operator
# yaw becomes the nearest whole number of 0.26 rad steps and the
# leftover simply stays unserved until the operator turns further.
print("\nturn to 100 degrees")
print("-------------------")
total = 0.0
for topic, message in run_frames(synth_frames("turn", turn_angle=math.radians(100))):
    if topic != "gait_events":
        continue
    t = message.stamp_us / 1e6
    if message.event == "turn":
        print(f"{t:7.2f}s  turn {message.direction} in {message.steps} steps")
    elif message.event == "motion_finished":
        total += message.heading_delta
        print(f"{t:7.2f}s  {message.motion}  heading now {total:+.2f} rad")
    else:
        print(f"{t:7.2f}s  {message.event}")

print(f"\nasked {math.radians(100):.3f} rad, walked {total:.3f} rad; "
      f"the difference is below one turn step")
