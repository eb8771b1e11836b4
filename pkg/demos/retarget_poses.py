"""
Skeleton poses to robot joint targets
=====================================

"""

from dataclasses import replace

from teleop.retarget import retarget_upper_body
from teleop.scenarios import synth_frames
from teleop.skeleton import StaleJointFilter

# Run a waving arm through the retargeter and watch the elbow and
# shoulder targets follow the skeleton.
frames = synth_frames("arm_wave", duration_s=2.0)

print("   t (s)   r_shoulder_roll   r_elbow")
for frame in frames[::5]:
    angles = retarget_upper_body(frame)
    t = frame.stamp_us / 1e6
    print(f"{t:8.2f}   {angles.shoulder_roll_r:15.3f}   {angles.elbow_r:7.3f}")

# as_angle_set() packs the same numbers into the message the pipeline
# publishes, head joints pinned at neutral
batch = retarget_upper_body(frames[-1]).as_angle_set()
print(f"\npublished form: {len(batch.angles)} joints at stamp {batch.stamp_us}")

# Trackers flag joints they lost with low confidence. The stale-joint
# filter stands the last confident sample in, so one blurry wrist does
# not make the whole arm twitch.
filt = StaleJointFilter()
filt.apply(frames[0])
blurry = dict(frames[20].joints)
blurry["right_hand"] = replace(blurry["right_hand"], confidence=0.1)
effective = filt.apply(replace(frames[20], joints=blurry))
stale = effective["right_hand"].position == frames[0].joints["right_hand"].position
mixed = retarget_upper_body(effective)
print(f"blurry right hand held from the first frame: {stale}; "
      f"elbow target {mixed.elbow_r:.3f}")
