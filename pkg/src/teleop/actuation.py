"""Motor command generation and the kinematic joint simulator.

The speed governor makes each motor's speed proportional to the angular
displacement it has to cover: w = w0 * (1 + |phi_new - phi_prev| / pi),
so speed stays in [w0, 2*w0] and a half-turn displacement doubles the
base speed. Displacement is capped at pi first, which keeps the bound
even for the shoulder-pitch joints whose mechanical range exceeds a full
turn.

The simulator replaces physical servos: each joint moves toward its
commanded target at the commanded speed and stops exactly on it. A newer
command for a joint replaces the in-flight one.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

from .robot import (
    JointAngleSet,
    LimitsTable,
    RobotJointName,
    default_table,
    neutral_pose,
)


@dataclass(frozen=True)
class SpeedGovernorConfig:
    base_speed_rad_s: float = 1.0

    def __post_init__(self):
        if not (self.base_speed_rad_s > 0):
            raise ValueError(f"base speed must be positive, got {self.base_speed_rad_s!r}")


@dataclass(frozen=True)
class JointCommand:
    joint: RobotJointName
    target_angle: float
    speed: float
    stamp_us: int


@dataclass(frozen=True)
class CommandBatch:
    """All commands issued for one input frame or keyframe."""

    stamp_us: int
    commands: Tuple[JointCommand, ...]


@dataclass(frozen=True)
class RobotStateMsg:
    """Simulator telemetry: joint angles plus the tracked base pose."""

    stamp_us: int
    angles: Mapping[RobotJointName, float]
    heading: float = 0.0
    position: Tuple[float, float] = (0.0, 0.0)


def govern_speed(cfg: SpeedGovernorConfig, phi_new: float, phi_prev: float) -> float:
    if not (math.isfinite(phi_new) and math.isfinite(phi_prev)):
        raise ValueError("angles must be finite")
    displacement = min(abs(phi_new - phi_prev), math.pi)
    return cfg.base_speed_rad_s * (1.0 + displacement / math.pi)


@dataclass(frozen=True)
class SimRobotState:
    stamp_us: int
    current_angles: Mapping[RobotJointName, float]
    active: Mapping[RobotJointName, JointCommand] = field(default_factory=dict)

    @staticmethod
    def initial(stamp_us: int = 0, table: Optional[LimitsTable] = None) -> "SimRobotState":
        return SimRobotState(
            stamp_us=stamp_us,
            current_angles=dict(neutral_pose(stamp_us, table).angles),
        )


def make_commands(
    cfg: SpeedGovernorConfig, targets: JointAngleSet, state: SimRobotState
) -> List[JointCommand]:
    """One command per target joint, speed governed against the current angle."""
    commands = []
    for joint, target in targets.angles.items():
        prev = state.current_angles.get(joint, 0.0)
        commands.append(
            JointCommand(
                joint=joint,
                target_angle=target,
                speed=govern_speed(cfg, target, prev),
                stamp_us=targets.stamp_us,
            )
        )
    return commands


def apply_commands(state: SimRobotState, commands: List[JointCommand]) -> SimRobotState:
    """Replace in-flight commands; a newer target overwrites the old one."""
    active = dict(state.active)
    for cmd in commands:
        active[cmd.joint] = cmd
    return replace(state, active=active)


def sim_step(
    state: SimRobotState, dt: float, table: Optional[LimitsTable] = None
) -> SimRobotState:
    """Advance every in-flight command by dt seconds, saturating at the target."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    tbl = table or default_table()
    angles = dict(state.current_angles)
    active = dict(state.active)
    for joint, cmd in list(active.items()):
        current = angles.get(joint, 0.0)
        remaining = cmd.target_angle - current
        step = cmd.speed * dt
        if abs(remaining) <= step:
            angles[joint] = tbl.clamp(joint, cmd.target_angle)
            del active[joint]
        else:
            angles[joint] = tbl.clamp(joint, current + math.copysign(step, remaining))
    return SimRobotState(
        stamp_us=state.stamp_us + round(dt * 1e6),
        current_angles=angles,
        active=active,
    )


class KinematicSimulator:
    """Integrates joint commands and tracks the robot's planar pose.

    Owned by a single tick loop: commands and gait events arrive over the
    bus, `tick` is the only mutator. Heading/displacement deltas come
    from finished locomotion motion sets.
    """

    def __init__(
        self,
        table: Optional[LimitsTable] = None,
        stamp_us: int = 0,
    ):
        self._table = table or default_table()
        self.state = SimRobotState.initial(stamp_us, self._table)
        self.heading = 0.0
        self.position = (0.0, 0.0)

    def apply_batch(self, batch: CommandBatch) -> None:
        self.state = apply_commands(self.state, list(batch.commands))

    def apply_pose_delta(self, heading_delta: float, displacement: float) -> None:
        # Displacement is along the heading *before* the turn is added;
        # shipped motion sets never carry both at once.
        x, y = self.position
        x += displacement * -math.sin(self.heading)
        y += displacement * math.cos(self.heading)
        self.position = (x, y)
        self.heading = wrap_angle(self.heading + heading_delta)

    def tick(self, dt: float) -> RobotStateMsg:
        self.state = sim_step(self.state, dt, self._table)
        return self.snapshot()

    def snapshot(self) -> RobotStateMsg:
        return RobotStateMsg(
            stamp_us=self.state.stamp_us,
            angles=dict(self.state.current_angles),
            heading=self.heading,
            position=self.position,
        )


def wrap_angle(a: float) -> float:
    wrapped = math.atan2(math.sin(a), math.cos(a))
    return math.pi if wrapped == -math.pi else wrapped


def run_simulator_node(bus, rate_hz: float = 100.0, stop: Optional[threading.Event] = None):
    """Service loop: consume "commands" and "gait_events", publish "robot_state".

    Blocks until `stop` is set or the bus closes.
    """
    from .wire import decode_payload, now_us  # late import; wire is downstream

    sim = KinematicSimulator(stamp_us=now_us())
    commands_sub = bus.subscribe("commands")
    events_sub = bus.subscribe("gait_events")
    period = 1.0 / rate_hz
    stop = stop or threading.Event()
    try:
        while not stop.is_set():
            started = time.monotonic()
            while True:
                env = commands_sub.get(timeout=0)
                if env is None:
                    break
                sim.apply_batch(decode_payload(env.kind, env.payload))
            while True:
                env = events_sub.get(timeout=0)
                if env is None:
                    break
                event = decode_payload(env.kind, env.payload)
                if event.event == "motion_finished":
                    sim.apply_pose_delta(event.heading_delta, event.displacement)
            sim.tick(period)
            bus.publish("robot_state", sim.snapshot())
            if bus.closed:
                break
            elapsed = time.monotonic() - started
            if elapsed < period:
                stop.wait(period - elapsed)
    finally:
        commands_sub.close()
        events_sub.close()
    return sim
