"""Gait control: leg-lift detection, the step decision machine, turning.

Walking is driven by four monitored values: each knee's bend angle and
each knee's depth (z, distance from the sensor). Lifting a leg pushes
its knee angle over the lift threshold and marks that leg; placing it
back down drops the angle below the place threshold (hysteresis), at
which point the depth difference between the knees decides the step:

    initial stance, marked knee deeper   -> back step with the marked leg
    initial stance, marked knee shallower-> forward step with the marked leg
    initial stance, |difference| small   -> noise, no step
    split stance                         -> the opposite step with the
                                            marked leg, returning to the
                                            initial stance

"Initial" means both legs together; after any step exactly one leg is
Forward and the other Back until the countering step resets them.

Turning quantizes the operator's torso yaw into a whole number of canned
turn steps. Step and turn choreography ships as motion sets: keyframe
sequences over the leg joints with per-keyframe hold times plus the
heading/displacement the move is declared to produce. The shipped sets
are simulator-only and end with the legs back at neutral.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from .actuation import (
    CommandBatch,
    SimRobotState,
    SpeedGovernorConfig,
    make_commands,
)
from .robot import (
    JointAngleSet,
    LimitsTable,
    RobotJointName,
    default_table,
)
from .skeleton import FrameLike, joint_angle, joint_position

# One canned turn step rotates the robot by this much; keep the gait
# config's turn_step_quantum equal to the shipped sets' heading_delta or
# turn convergence degrades.
TURN_STEP_RAD = 0.26

LEGS = ("left", "right")


class InconsistentState(RuntimeError):
    """Gait memory violates its own invariants; force the initial stance."""


class InvalidMotionSet(ValueError):
    """A keyframe drives a joint outside its mechanical range."""


class LegState(enum.Enum):
    FORWARD = "forward"
    BACK = "back"
    NULL = "null"


@dataclass(frozen=True)
class GaitState:
    initial_state: bool = True
    left_state: LegState = LegState.NULL
    right_state: LegState = LegState.NULL
    marked_leg: Optional[str] = None
    lifted: bool = False

    @staticmethod
    def initial() -> "GaitState":
        return GaitState()

    def leg_state(self, leg: str) -> LegState:
        return self.left_state if leg == "left" else self.right_state

    @property
    def lifted_leg(self) -> Optional[str]:
        return self.marked_leg if self.lifted else None

    def check_invariants(self) -> None:
        states = {self.left_state, self.right_state}
        if self.initial_state:
            if states != {LegState.NULL}:
                raise InconsistentState(f"initial stance with leg states {states}")
        else:
            if states != {LegState.FORWARD, LegState.BACK}:
                raise InconsistentState(f"split stance with leg states {states}")


@dataclass(frozen=True)
class GaitConfig:
    knee_lift_threshold: float = 0.7
    knee_place_threshold: float = 0.5
    depth_threshold: float = 0.08
    yaw_threshold: float = 0.35
    turn_step_quantum: float = TURN_STEP_RAD
    max_turn_steps: int = 12
    # A turn is only planned once the yaw has stopped moving: the span of
    # the last yaw_settle_frames readings must stay within the tolerance.
    yaw_settle_frames: int = 3
    yaw_settle_tol: float = 0.05

    def __post_init__(self):
        if not self.knee_place_threshold < self.knee_lift_threshold:
            raise ValueError("place threshold must sit below the lift threshold")
        for name in ("knee_lift_threshold", "knee_place_threshold", "depth_threshold",
                     "yaw_threshold", "turn_step_quantum"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_turn_steps < 1 or self.yaw_settle_frames < 1:
            raise ValueError("max_turn_steps and yaw_settle_frames must be >= 1")


@dataclass(frozen=True)
class StepDecision:
    action: str  # "forward" | "back" | "none"
    leg: Optional[str] = None

    @staticmethod
    def forward_step(leg: str) -> "StepDecision":
        return StepDecision("forward", leg)

    @staticmethod
    def back_step(leg: str) -> "StepDecision":
        return StepDecision("back", leg)


NO_STEP = StepDecision("none", None)


@dataclass(frozen=True)
class GaitEvent:
    """Telemetry published on the "gait_events" topic."""

    stamp_us: int
    event: str  # lifted | placed | step | turn | locomotion_started |
    #             motion_finished | locomotion_finished | reset
    leg: Optional[str] = None
    decision: Optional[str] = None
    motion: Optional[str] = None
    direction: Optional[str] = None
    steps: int = 0
    heading_delta: float = 0.0
    displacement: float = 0.0


def knee_angle(frame: FrameLike, side: str) -> float:
    """Bend of one knee: 0 standing straight, grows as the leg lifts."""
    hip = joint_position(frame, f"{side}_hip")
    knee = joint_position(frame, f"{side}_knee")
    foot = joint_position(frame, f"{side}_foot")
    return joint_angle(hip, knee, foot)


def knee_depth(frame: FrameLike, side: str) -> float:
    """Knee distance from the sensor along its optical axis (z)."""
    return joint_position(frame, f"{side}_knee").z


def update_lift(
    state: GaitState, cfg: GaitConfig, left_knee: float, right_knee: float
) -> Tuple[GaitState, Optional[Tuple[str, str]]]:
    """Track which leg is in the air; returns ("lifted"|"placed", leg) events.

    The dual thresholds give hysteresis: a knee wobbling between the
    place and lift thresholds produces no events. While one leg is up,
    the other leg's angle is ignored entirely.
    """
    if state.lifted:
        knee = left_knee if state.marked_leg == "left" else right_knee
        if knee < cfg.knee_place_threshold:
            return replace(state, lifted=False), ("placed", state.marked_leg)
        return state, None
    crossers = [
        (angle, leg)
        for angle, leg in ((left_knee, "left"), (right_knee, "right"))
        if angle > cfg.knee_lift_threshold
    ]
    if crossers:
        _, leg = max(crossers)
        return replace(state, marked_leg=leg, lifted=True), ("lifted", leg)
    return state, None


def decide_step(
    state: GaitState, cfg: GaitConfig, marked_depth: float, unmarked_depth: float
) -> Tuple[StepDecision, GaitState]:
    """Step decision at the instant the marked leg is placed back down.

    In the initial stance the depth difference decides forward vs back
    (or rejects the placement as noise); in a split stance the marked
    leg takes the step that returns the robot to the initial stance.
    """
    marked = state.marked_leg
    if marked is None:
        raise InconsistentState("decide_step called with no marked leg")
    unmarked = "right" if marked == "left" else "left"
    depth_diff = marked_depth - unmarked_depth

    def with_states(m: LegState, u: LegState, initial: bool) -> GaitState:
        states = {marked: m, unmarked: u}
        return replace(
            state,
            initial_state=initial,
            left_state=states["left"],
            right_state=states["right"],
        )

    if state.initial_state:
        if depth_diff > cfg.depth_threshold:
            return (
                StepDecision.back_step(marked),
                with_states(LegState.BACK, LegState.FORWARD, initial=False),
            )
        if depth_diff < -cfg.depth_threshold:
            return (
                StepDecision.forward_step(marked),
                with_states(LegState.FORWARD, LegState.BACK, initial=False),
            )
        return NO_STEP, state

    marked_state = state.leg_state(marked)
    if marked_state is LegState.FORWARD:
        decision = StepDecision.back_step(marked)
    elif marked_state is LegState.BACK:
        decision = StepDecision.forward_step(marked)
    else:
        raise InconsistentState(f"split stance but marked leg state is {marked_state}")
    return decision, with_states(LegState.NULL, LegState.NULL, initial=True)


def plan_turn(cfg: GaitConfig, torso_yaw: float) -> Tuple[str, int]:
    """Quantize a torso yaw into canned turn steps.

    Positive yaw turns left. Below the deadband no turn is planned; above
    it at least one step is taken, rounding half away from zero and
    capping at max_turn_steps.
    """
    if abs(torso_yaw) <= cfg.yaw_threshold:
        return ("none", 0)
    steps = int(math.floor(abs(torso_yaw) / cfg.turn_step_quantum + 0.5))
    steps = max(1, min(steps, cfg.max_turn_steps))
    return ("left" if torso_yaw > 0 else "right", steps)


@dataclass(frozen=True)
class Keyframe:
    angles: Mapping[RobotJointName, float]
    hold_ms: float

    def __post_init__(self):
        if self.hold_ms < 0:
            raise ValueError("keyframe hold must be >= 0 ms")


@dataclass(frozen=True)
class MotionSet:
    name: str
    keyframes: Tuple[Keyframe, ...] = ()
    heading_delta: float = 0.0
    displacement: float = 0.0

    @property
    def total_ms(self) -> float:
        return sum(kf.hold_ms for kf in self.keyframes)

    def validate(self, table: Optional[LimitsTable] = None) -> None:
        tbl = table or default_table()
        for i, kf in enumerate(self.keyframes):
            for joint, angle in kf.angles.items():
                if not tbl.in_range(joint, angle):
                    d = tbl.descriptor(joint)
                    raise InvalidMotionSet(
                        f"{self.name} keyframe {i}: {joint} = {angle} outside "
                        f"[{d.theta_min}, {d.theta_max}]"
                    )


def default_motion_sets() -> Dict[str, MotionSet]:
    """Simulator-only leg choreography; every set ends back at neutral."""
    J = RobotJointName

    def sets(name, frames, heading=0.0, disp=0.0):
        return MotionSet(
            name=name,
            keyframes=tuple(Keyframe(angles, hold) for angles, hold in frames),
            heading_delta=heading,
            displacement=disp,
        )

    zero_legs = {
        J.LEFT_HIP_PITCH: 0.0, J.LEFT_KNEE: 0.0, J.LEFT_ANKLE_PITCH: 0.0,
        J.RIGHT_HIP_PITCH: 0.0, J.RIGHT_KNEE: 0.0, J.RIGHT_ANKLE_PITCH: 0.0,
    }
    zero_yaws = {J.LEFT_HIP_YAW: 0.0, J.RIGHT_HIP_YAW: 0.0}

    return {
        "forward_step_left": sets(
            "forward_step_left",
            [
                ({J.LEFT_HIP_PITCH: 0.40, J.LEFT_KNEE: -0.60,
                  J.LEFT_ANKLE_PITCH: 0.20, J.RIGHT_ANKLE_PITCH: -0.10}, 300),
                ({J.LEFT_HIP_PITCH: 0.15, J.LEFT_KNEE: -0.20,
                  J.LEFT_ANKLE_PITCH: 0.05, J.RIGHT_HIP_PITCH: -0.15,
                  J.RIGHT_KNEE: 0.25, J.RIGHT_ANKLE_PITCH: -0.05}, 300),
                (dict(zero_legs), 300),
            ],
            disp=0.12,
        ),
        "forward_step_right": sets(
            "forward_step_right",
            [
                ({J.RIGHT_HIP_PITCH: -0.40, J.RIGHT_KNEE: 0.60,
                  J.RIGHT_ANKLE_PITCH: -0.20, J.LEFT_ANKLE_PITCH: 0.10}, 300),
                ({J.RIGHT_HIP_PITCH: -0.15, J.RIGHT_KNEE: 0.20,
                  J.RIGHT_ANKLE_PITCH: -0.05, J.LEFT_HIP_PITCH: 0.15,
                  J.LEFT_KNEE: -0.25, J.LEFT_ANKLE_PITCH: 0.05}, 300),
                (dict(zero_legs), 300),
            ],
            disp=0.12,
        ),
        "back_step_left": sets(
            "back_step_left",
            [
                ({J.LEFT_HIP_PITCH: -0.20, J.LEFT_KNEE: -0.50,
                  J.LEFT_ANKLE_PITCH: -0.10, J.RIGHT_ANKLE_PITCH: 0.05}, 300),
                ({J.LEFT_HIP_PITCH: -0.10, J.LEFT_KNEE: -0.15,
                  J.RIGHT_HIP_PITCH: 0.10, J.RIGHT_KNEE: 0.20}, 300),
                (dict(zero_legs), 300),
            ],
            disp=-0.10,
        ),
        "back_step_right": sets(
            "back_step_right",
            [
                ({J.RIGHT_HIP_PITCH: 0.20, J.RIGHT_KNEE: 0.50,
                  J.RIGHT_ANKLE_PITCH: 0.10, J.LEFT_ANKLE_PITCH: -0.05}, 300),
                ({J.RIGHT_HIP_PITCH: 0.10, J.RIGHT_KNEE: 0.15,
                  J.LEFT_HIP_PITCH: -0.10, J.LEFT_KNEE: -0.20}, 300),
                (dict(zero_legs), 300),
            ],
            disp=-0.10,
        ),
        "turn_left": sets(
            "turn_left",
            [
                ({J.LEFT_HIP_YAW: 0.35, J.RIGHT_HIP_YAW: -0.35,
                  J.LEFT_KNEE: -0.20, J.RIGHT_KNEE: 0.20}, 300),
                ({**zero_yaws, J.LEFT_KNEE: 0.0, J.RIGHT_KNEE: 0.0}, 300),
            ],
            heading=TURN_STEP_RAD,
        ),
        "turn_right": sets(
            "turn_right",
            [
                ({J.LEFT_HIP_YAW: -0.25, J.RIGHT_HIP_YAW: 0.25,
                  J.LEFT_KNEE: -0.20, J.RIGHT_KNEE: 0.20}, 300),
                ({**zero_yaws, J.LEFT_KNEE: 0.0, J.RIGHT_KNEE: 0.0}, 300),
            ],
            heading=-TURN_STEP_RAD,
        ),
    }


class MotionPlayer:
    """Plays motion sets against the stream clock.

    The pipeline advances the player with each incoming frame stamp;
    keyframes whose scheduled time has arrived come back as target
    angle sets. Completion of each set reports its declared pose delta.
    In a live run the stream clock tracks wall time, so the pacing is
    the same "spaced by hold duration" behavior either way.
    """

    def __init__(self, table: Optional[LimitsTable] = None):
        self._table = table or default_table()
        self._keyframes: List[Tuple[int, JointAngleSet]] = []
        self._set_ends: List[Tuple[int, MotionSet]] = []

    @property
    def active(self) -> bool:
        return bool(self._keyframes or self._set_ends)

    def start(self, sets: List[MotionSet], start_us: int) -> float:
        """Schedule the sets back to back; returns the total duration in ms."""
        for mset in sets:
            mset.validate(self._table)
        self._keyframes.clear()
        self._set_ends.clear()
        cursor = start_us
        for mset in sets:
            for kf in mset.keyframes:
                self._keyframes.append(
                    (cursor, JointAngleSet(stamp_us=cursor, angles=dict(kf.angles)))
                )
                cursor += round(kf.hold_ms * 1000)
            self._set_ends.append((cursor, mset))
        return (cursor - start_us) / 1000.0

    def advance(self, now_us: int) -> Tuple[List[JointAngleSet], List[MotionSet], bool]:
        """Returns (due keyframe targets, finished sets, all done)."""
        due: List[JointAngleSet] = []
        while self._keyframes and self._keyframes[0][0] <= now_us:
            due.append(self._keyframes.pop(0)[1])
        finished: List[MotionSet] = []
        while self._set_ends and self._set_ends[0][0] <= now_us:
            finished.append(self._set_ends.pop(0)[1])
        return due, finished, not self.active

    def cancel(self) -> None:
        self._keyframes.clear()
        self._set_ends.clear()


def play_motion_set(
    mset: MotionSet,
    emit: Callable[[CommandBatch], None],
    cfg: Optional[SpeedGovernorConfig] = None,
    state: Optional[SimRobotState] = None,
    start_us: int = 0,
    on_complete: Optional[Callable[[float, float], None]] = None,
    table: Optional[LimitsTable] = None,
) -> float:
    """Emit a whole motion set as governed command batches.

    Batches carry stamps spaced by the keyframe holds, starting at
    start_us. Returns the total duration in ms and reports the set's
    declared heading/displacement through on_complete.
    """
    mset.validate(table)
    cfg = cfg or SpeedGovernorConfig()
    state = state or SimRobotState.initial(start_us, table)
    angles = dict(state.current_angles)
    cursor = start_us
    for kf in mset.keyframes:
        targets = JointAngleSet(stamp_us=cursor, angles=dict(kf.angles))
        shadow = SimRobotState(stamp_us=cursor, current_angles=angles)
        commands = make_commands(cfg, targets, shadow)
        emit(CommandBatch(stamp_us=cursor, commands=tuple(commands)))
        angles.update(kf.angles)
        cursor += round(kf.hold_ms * 1000)
    if on_complete is not None:
        on_complete(mset.heading_delta, mset.displacement)
    return (cursor - start_us) / 1000.0
