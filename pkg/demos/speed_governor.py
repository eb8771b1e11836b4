"""
Servo speed vs. pose jump
=========================

"""

import math

from teleop.actuation import SpeedGovernorConfig, govern_speed

# Small pose changes get the base speed; a half-turn jump gets double.
# Scaling the speed with the jump keeps arrival time roughly flat, so a
# big swing does not crawl and a twitch does not snap.
cfg = SpeedGovernorConfig(base_speed_rad_s=2.0)

print(f"base speed {cfg.base_speed_rad_s:.1f} rad/s\n")
print("  jump (rad)   speed (rad/s)")
for num in range(9):
    jump = num * math.pi / 8
    speed = govern_speed(cfg, jump, 0.0)
    bar = "#" * round(speed * 6)
    print(f"{jump:12.3f}   {speed:6.3f}  {bar}")

# Beyond half a turn the jump is treated as half a turn. A glitching
# tracker can therefore never demand unbounded servo speed.
print(f"\njump of a full turn: {govern_speed(cfg, 2 * math.pi, 0.0):.3f} rad/s (capped)")
