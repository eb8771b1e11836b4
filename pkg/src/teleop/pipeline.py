"""The arbiter: retargeting and gait control with locomotion precedence.

One node consumes skeleton frames, decides what the robot does with
them, and publishes the results. Upper-body imitation runs whenever
nothing more important is happening; a step decision or a settled torso
twist starts a locomotion motion set, and while any motion set plays
the upper body is paused completely — not a single imitation target is
emitted until the set finishes. Imitation resumes on the next frame
after completion.

Arbitration details, all of which matter for reproducibility:

  * A placed-leg step decision beats a turn when both trigger on one
    frame; yaw fluctuates while the operator steps, a placement is
    deliberate.
  * Turns are planned against the yaw still unserved: operator yaw
    minus the heading already commanded. The plan fires only once the
    yaw has been steady for a few frames, so a slow twist is not
    chopped into premature single steps mid-ramp.
  * All decisions are keyed to frame stamps (stream time), never the
    wall clock, so replaying a recording reproduces the exact output
    sequence.

The service loop adds a starvation watchdog: when no frame arrives for
a second, it emits hold commands at the last targets and resets the
gait memory to the initial stance.
"""

from __future__ import annotations

import enum
import threading
from collections import deque
from dataclasses import dataclass, replace
from typing import Deque, Dict, List, Optional, Tuple

from .actuation import CommandBatch, SimRobotState, make_commands, wrap_angle
from .bus import Bus, BusClosed
from .config import PipelineConfig
from .locomotion import (
    GaitEvent,
    GaitState,
    InconsistentState,
    MotionPlayer,
    MotionSet,
    decide_step,
    default_motion_sets,
    knee_angle,
    knee_depth,
    plan_turn,
    update_lift,
)
from .retarget import UpperBodyRetargeter
from .robot import JointAngleSet, LimitsTable, RobotJointName, default_table, neutral_pose
from .skeleton import (
    DegenerateQuaternion,
    DegenerateSegment,
    MissingJoint,
    SkeletonFrame,
    StaleJointFilter,
    quaternion_to_yaw,
)
from .wire import Message, decode_payload

REQUIRED_MOTION_SETS = (
    "forward_step_left",
    "forward_step_right",
    "back_step_left",
    "back_step_right",
    "turn_left",
    "turn_right",
)

Emitted = List[Tuple[str, Message]]


class ArbiterMode(enum.Enum):
    IMITATING = "imitating"
    LOCOMOTING = "locomoting"


@dataclass
class PipelineStats:
    frames_seen: int = 0
    frames_dropped: int = 0
    steps_started: int = 0
    turns_started: int = 0
    holds_emitted: int = 0


class Arbiter:
    """Per-frame decision core. Single-threaded; owns all mutable state."""

    def __init__(
        self,
        cfg: Optional[PipelineConfig] = None,
        limits: Optional[LimitsTable] = None,
        motion_sets: Optional[Dict[str, MotionSet]] = None,
    ):
        self.cfg = cfg or PipelineConfig()
        self.table = limits or default_table()
        self.motion_sets = dict(motion_sets or default_motion_sets())
        missing = [n for n in REQUIRED_MOTION_SETS if n not in self.motion_sets]
        if missing:
            raise ValueError(f"motion sets missing: {missing}")
        for mset in self.motion_sets.values():
            mset.validate(self.table)

        self.mode = ArbiterMode.IMITATING
        self.gait = GaitState.initial()
        self.stats = PipelineStats()
        self._player = MotionPlayer(self.table)
        self._filter = StaleJointFilter()
        self._retargeter = UpperBodyRetargeter(self.table)
        self._last_upper: Optional[JointAngleSet] = None
        # Speed governing compares against the last commanded target, not
        # simulator feedback; keeps the output a pure function of input.
        self._phi_prev: Dict[RobotJointName, float] = dict(neutral_pose().angles)
        self._heading_commanded = 0.0
        self._yaw_window: Deque[float] = deque(maxlen=self.cfg.gait.yaw_settle_frames)
        self._last_stamp: Optional[int] = None

    @property
    def heading_commanded(self) -> float:
        """Net heading change of all finished turn sets."""
        return self._heading_commanded

    def reset_gait(self) -> None:
        self.gait = GaitState.initial()
        self._yaw_window.clear()

    def hold_batch(self, stamp_us: int) -> CommandBatch:
        """Commands that freeze every joint at its last target."""
        targets = JointAngleSet(stamp_us=stamp_us, angles=dict(self._phi_prev))
        shadow = SimRobotState(stamp_us=stamp_us, current_angles=self._phi_prev)
        return CommandBatch(
            stamp_us=stamp_us,
            commands=tuple(make_commands(self.cfg.governor, targets, shadow)),
        )

    def _emit_command_batch(self, out: Emitted, targets: JointAngleSet) -> None:
        shadow = SimRobotState(stamp_us=targets.stamp_us, current_angles=self._phi_prev)
        batch = CommandBatch(
            stamp_us=targets.stamp_us,
            commands=tuple(make_commands(self.cfg.governor, targets, shadow)),
        )
        self._phi_prev.update(targets.angles)
        out.append(("commands", batch))

    def _advance_player(self, out: Emitted, stamp_us: int) -> None:
        due, finished, done = self._player.advance(stamp_us)
        for targets in due:
            self._emit_command_batch(out, targets)
        for mset in finished:
            self._heading_commanded = wrap_angle(
                self._heading_commanded + mset.heading_delta
            )
            out.append(
                (
                    "gait_events",
                    GaitEvent(
                        stamp_us=stamp_us,
                        event="motion_finished",
                        motion=mset.name,
                        heading_delta=mset.heading_delta,
                        displacement=mset.displacement,
                    ),
                )
            )
        if done and self.mode is ArbiterMode.LOCOMOTING:
            out.append(
                ("gait_events", GaitEvent(stamp_us=stamp_us, event="locomotion_finished"))
            )
            self.mode = ArbiterMode.IMITATING

    def _start_locomotion(self, out: Emitted, stamp_us: int, names: List[str]) -> None:
        sets = [self.motion_sets[name] for name in names]
        self._player.start(sets, stamp_us)
        out.append(
            (
                "gait_events",
                GaitEvent(
                    stamp_us=stamp_us,
                    event="locomotion_started",
                    motion=",".join(names),
                    steps=len(sets),
                ),
            )
        )
        self.mode = ArbiterMode.LOCOMOTING
        self._yaw_window.clear()
        # the first keyframe is due at the start stamp itself
        self._advance_player(out, stamp_us)

    def _handle_placement(self, out: Emitted, stamp_us: int, joints) -> bool:
        """Step decision at a placed event. True if locomotion started."""
        marked = self.gait.marked_leg
        unmarked = "right" if marked == "left" else "left"
        try:
            marked_depth = knee_depth(joints, marked)
            unmarked_depth = knee_depth(joints, unmarked)
        except MissingJoint:
            return False
        try:
            decision, self.gait = decide_step(
                self.gait, self.cfg.gait, marked_depth, unmarked_depth
            )
        except InconsistentState:
            self.reset_gait()
            out.append(("gait_events", GaitEvent(stamp_us=stamp_us, event="reset")))
            return False
        out.append(
            (
                "gait_events",
                GaitEvent(
                    stamp_us=stamp_us,
                    event="step",
                    leg=decision.leg,
                    decision=decision.action,
                ),
            )
        )
        if decision.action == "none":
            return False
        prefix = "forward_step" if decision.action == "forward" else "back_step"
        self.stats.steps_started += 1
        self._start_locomotion(out, stamp_us, [f"{prefix}_{decision.leg}"])
        return True

    def _maybe_turn(self, out: Emitted, stamp_us: int, torso_yaw: Optional[float]) -> bool:
        """Turn planning while standing. True if locomotion started."""
        standing = self.gait.initial_state and not self.gait.lifted
        if not standing or torso_yaw is None:
            self._yaw_window.clear()
            return False
        unserved = wrap_angle(torso_yaw - self._heading_commanded)
        self._yaw_window.append(unserved)
        if len(self._yaw_window) < self.cfg.gait.yaw_settle_frames:
            return False
        if max(self._yaw_window) - min(self._yaw_window) > self.cfg.gait.yaw_settle_tol:
            return False
        direction, steps = plan_turn(self.cfg.gait, unserved)
        if steps == 0:
            return False
        names = [f"turn_{direction}"] * steps
        planned = sum(self.motion_sets[n].heading_delta for n in names)
        out.append(
            (
                "gait_events",
                GaitEvent(
                    stamp_us=stamp_us,
                    event="turn",
                    direction=direction,
                    steps=steps,
                    heading_delta=planned,
                ),
            )
        )
        self.stats.turns_started += 1
        self._start_locomotion(out, stamp_us, names)
        return True

    def process_frame(self, frame: SkeletonFrame) -> Emitted:
        """One frame in, the complete list of (topic, message) out."""
        out: Emitted = []
        stamp = frame.stamp_us
        if self._last_stamp is not None and stamp <= self._last_stamp:
            self.stats.frames_dropped += 1
            return out
        self._last_stamp = stamp
        self.stats.frames_seen += 1

        joints = self._filter.apply(frame)

        # lift tracking runs every frame, in or out of locomotion
        lift_event = None
        try:
            left_knee = knee_angle(joints, "left")
            right_knee = knee_angle(joints, "right")
        except (MissingJoint, DegenerateSegment):
            pass
        else:
            self.gait, lift_event = update_lift(
                self.gait, self.cfg.gait, left_knee, right_knee
            )
            if lift_event is not None:
                kind, leg = lift_event
                out.append(
                    ("gait_events", GaitEvent(stamp_us=stamp, event=kind, leg=leg))
                )

        torso_yaw: Optional[float] = None
        if "torso" in joints:
            try:
                torso_yaw = quaternion_to_yaw(joints["torso"].orientation)
            except DegenerateQuaternion:
                torso_yaw = None

        if self.mode is ArbiterMode.LOCOMOTING:
            # keyframes and completions flow; imitation stays silent, and
            # step decisions wait for the next placement while imitating
            self._yaw_window.clear()
            self._advance_player(out, stamp)
            return out

        if lift_event is not None and lift_event[0] == "placed":
            if self._handle_placement(out, stamp, joints):
                return out

        if self._maybe_turn(out, stamp, torso_yaw):
            return out

        if (self.stats.frames_seen - 1) % self.cfg.imitation_interval_frames == 0:
            targets: Optional[JointAngleSet] = None
            try:
                upper = self._retargeter.retarget(joints)
                targets = replace(upper.as_angle_set(), stamp_us=stamp)
                self._last_upper = targets
            except (MissingJoint, DegenerateSegment):
                if self._last_upper is not None:
                    targets = replace(self._last_upper, stamp_us=stamp)
            if targets is not None:
                out.append(("skel_angles", targets))
                self._emit_command_batch(out, targets)
        return out


def run_pipeline(
    bus: Bus,
    cfg: Optional[PipelineConfig] = None,
    limits: Optional[LimitsTable] = None,
    motion_sets: Optional[Dict[str, MotionSet]] = None,
    stop: Optional[threading.Event] = None,
    ready: Optional[threading.Event] = None,
) -> PipelineStats:
    """Service loop: "skeleton" in, everything else out.

    Sets `ready` once subscribed, so a producer can be sequenced after
    it. Returns the run's counters once `stop` is set or the bus closes.
    """
    arbiter = Arbiter(cfg, limits, motion_sets)
    stop = stop or threading.Event()
    sub = bus.subscribe("skeleton")
    if ready is not None:
        ready.set()
    starved = False
    try:
        while not stop.is_set() and not bus.closed:
            envelope = sub.get(timeout=arbiter.cfg.starvation_timeout_s)
            if envelope is None:
                if stop.is_set() or sub.closed or bus.closed:
                    break
                if not starved and arbiter.stats.frames_seen > 0:
                    starved = True
                    arbiter.reset_gait()
                    stamp = arbiter._last_stamp or 0
                    arbiter.stats.holds_emitted += 1
                    _publish_quietly(bus, "commands", arbiter.hold_batch(stamp))
                    _publish_quietly(
                        bus, "gait_events", GaitEvent(stamp_us=stamp, event="reset")
                    )
                continue
            starved = False
            frame = decode_payload(envelope.kind, envelope.payload)
            assert isinstance(frame, SkeletonFrame)
            for topic, message in arbiter.process_frame(frame):
                _publish_quietly(bus, topic, message)
    finally:
        bus.unsubscribe(sub)
        if arbiter.stats.frames_seen > 0:
            _publish_quietly(
                bus, "commands", arbiter.hold_batch(arbiter._last_stamp or 0)
            )
    return arbiter.stats


def _publish_quietly(bus: Bus, topic: str, message: Message) -> None:
    try:
        bus.publish(topic, message)
    except BusClosed:
        pass


def run_frames(
    frames,
    cfg: Optional[PipelineConfig] = None,
    limits: Optional[LimitsTable] = None,
    motion_sets: Optional[Dict[str, MotionSet]] = None,
) -> Emitted:
    """Feed a frame iterable straight through one arbiter; no bus, no clock.

    The workhorse for tests and offline analysis: the result is exactly
    the message sequence a live run over the same frames would publish.
    """
    arbiter = Arbiter(cfg, limits, motion_sets)
    out: Emitted = []
    for frame in frames:
        out.extend(arbiter.process_frame(frame))
    return out
