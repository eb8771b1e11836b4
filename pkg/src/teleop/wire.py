"""Wire format shared by streams, the bus, and bridge links.

Every message travels as one JSON object per line with exactly the
fields topic, seq, stamp_us, kind, payload. Serialization is canonical
(sorted keys, no whitespace) so equal messages produce identical bytes
and byte equality can stand in for message equality in tests and logs.

The envelope stamp is the sender's wall clock at publish time and
exists for latency measurement. Payloads carry their own stamp_us in
stream time; replaying a recorded stream reproduces payload stamps
exactly while envelope stamps differ run to run.

Control messages (handshakes, refusals) are JSON objects carrying a
"control" key and never carry envelope fields.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Tuple, Union

from .actuation import CommandBatch, JointCommand, RobotStateMsg
from .locomotion import GaitEvent
from .robot import JointAngleSet, RobotJointName
from .skeleton import JointSample, Point3, Quaternion, SkeletonFrame

PROTOCOL_VERSION = "teleop/1"

KINDS = (
    "skeleton_frame",
    "joint_angles",
    "joint_commands",
    "robot_state",
    "gait_event",
)

_ENVELOPE_FIELDS = ("topic", "seq", "stamp_us", "kind", "payload")


class WireFormatError(ValueError):
    """Malformed line: bad JSON, wrong fields, or an unknown kind."""


def now_us() -> int:
    """Wall clock in microseconds, for envelope stamps."""
    return time.time_ns() // 1000


def canonical_dumps(obj: Any) -> str:
    """The one serialization used everywhere; equal data, equal bytes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class Envelope:
    topic: str
    seq: int
    stamp_us: int
    kind: str
    payload: Mapping[str, Any]

    def encode(self) -> str:
        return canonical_dumps(
            {
                "topic": self.topic,
                "seq": self.seq,
                "stamp_us": self.stamp_us,
                "kind": self.kind,
                "payload": self.payload,
            }
        )


def _require_int(obj: Mapping[str, Any], key: str) -> int:
    value = obj.get(key)
    # bool passes isinstance(int) checks; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise WireFormatError(f"field {key!r} must be an integer, got {value!r}")
    return value


def decode_envelope(line: Union[str, bytes]) -> Envelope:
    obj = _parse_object(line)
    if set(obj) != set(_ENVELOPE_FIELDS):
        raise WireFormatError(
            f"envelope must carry exactly {list(_ENVELOPE_FIELDS)}, got {sorted(obj)}"
        )
    topic = obj["topic"]
    if not isinstance(topic, str) or not topic:
        raise WireFormatError(f"topic must be a non-empty string, got {topic!r}")
    seq = _require_int(obj, "seq")
    if seq < 0:
        raise WireFormatError(f"seq must be >= 0, got {seq}")
    stamp_us = _require_int(obj, "stamp_us")
    kind = obj["kind"]
    if kind not in KINDS:
        raise WireFormatError(f"unknown payload kind {kind!r}")
    payload = obj["payload"]
    if not isinstance(payload, dict):
        raise WireFormatError("payload must be a JSON object")
    return Envelope(topic=topic, seq=seq, stamp_us=stamp_us, kind=kind, payload=payload)


def _parse_object(line: Union[str, bytes]) -> Dict[str, Any]:
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise WireFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireFormatError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def decode_line(line: Union[str, bytes]) -> Union[Envelope, Dict[str, Any]]:
    """Either an envelope or a control message, depending on the line."""
    obj = _parse_object(line)
    if "control" in obj:
        return decode_control(obj)
    return decode_envelope(line)


# -- control messages ------------------------------------------------------


def make_hello(registry_hash: str) -> Dict[str, Any]:
    return {"control": "hello", "version": PROTOCOL_VERSION, "registry": registry_hash}


def make_refused(reason: str) -> Dict[str, Any]:
    return {"control": "refused", "reason": reason}


def decode_control(obj: Mapping[str, Any]) -> Dict[str, Any]:
    control = obj.get("control")
    if control == "hello":
        for key in ("version", "registry"):
            if not isinstance(obj.get(key), str):
                raise WireFormatError(f"hello must carry a string {key!r}")
        return dict(obj)
    if control == "refused":
        if not isinstance(obj.get("reason"), str):
            raise WireFormatError("refusal must carry a string reason")
        return dict(obj)
    raise WireFormatError(f"unknown control message {control!r}")


# -- payload codecs --------------------------------------------------------

Message = Union[SkeletonFrame, JointAngleSet, CommandBatch, RobotStateMsg, GaitEvent]


def _number(payload: Mapping[str, Any], key: str) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WireFormatError(f"field {key!r} must be a number, got {value!r}")
    return float(value)


def _number_list(value: Any, length: int, what: str) -> List[float]:
    if (
        not isinstance(value, list)
        or len(value) != length
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise WireFormatError(f"{what} must be a list of {length} numbers, got {value!r}")
    return [float(v) for v in value]


def _angles_dict(value: Any) -> Dict[RobotJointName, float]:
    if not isinstance(value, dict):
        raise WireFormatError("angles must be an object of joint -> radians")
    angles: Dict[RobotJointName, float] = {}
    for name, angle in value.items():
        try:
            joint = RobotJointName(name)
        except ValueError as exc:
            raise WireFormatError(f"unknown robot joint {name!r}") from exc
        if isinstance(angle, bool) or not isinstance(angle, (int, float)):
            raise WireFormatError(f"angle for {name!r} must be a number")
        angles[joint] = float(angle)
    return angles


def encode_skeleton_frame(frame: SkeletonFrame) -> Dict[str, Any]:
    joints = {}
    for name, sample in frame.joints.items():
        q = sample.orientation
        joints[name] = {
            "pos": [sample.position.x, sample.position.y, sample.position.z],
            "quat": [q.w, q.x, q.y, q.z],
            "conf": sample.confidence,
        }
    return {"stamp_us": frame.stamp_us, "joints": joints}


def decode_skeleton_frame(payload: Mapping[str, Any]) -> SkeletonFrame:
    joints_obj = payload.get("joints")
    if not isinstance(joints_obj, dict):
        raise WireFormatError("skeleton_frame payload must carry a joints object")
    joints = {}
    for name, sample in joints_obj.items():
        if not isinstance(sample, dict):
            raise WireFormatError(f"joint {name!r} must be an object")
        pos = _number_list(sample.get("pos"), 3, f"joint {name!r} pos")
        quat = _number_list(sample.get("quat"), 4, f"joint {name!r} quat")
        conf = _number(sample, "conf")
        try:
            joints[name] = JointSample(
                position=Point3(*pos),
                orientation=Quaternion(*quat),
                confidence=conf,
            )
        except ValueError as exc:
            raise WireFormatError(f"joint {name!r}: {exc}") from exc
    try:
        return SkeletonFrame(stamp_us=_require_int(payload, "stamp_us"), joints=joints)
    except ValueError as exc:
        raise WireFormatError(str(exc)) from exc


def encode_joint_angles(angles: JointAngleSet) -> Dict[str, Any]:
    return {
        "stamp_us": angles.stamp_us,
        "angles": {joint.value: angle for joint, angle in angles.angles.items()},
    }


def decode_joint_angles(payload: Mapping[str, Any]) -> JointAngleSet:
    return JointAngleSet(
        stamp_us=_require_int(payload, "stamp_us"),
        angles=_angles_dict(payload.get("angles")),
    )


def encode_joint_commands(batch: CommandBatch) -> Dict[str, Any]:
    return {
        "stamp_us": batch.stamp_us,
        "commands": [
            {
                "joint": c.joint.value,
                "target": c.target_angle,
                "speed": c.speed,
                "stamp_us": c.stamp_us,
            }
            for c in batch.commands
        ],
    }


def decode_joint_commands(payload: Mapping[str, Any]) -> CommandBatch:
    commands_obj = payload.get("commands")
    if not isinstance(commands_obj, list):
        raise WireFormatError("joint_commands payload must carry a commands list")
    commands = []
    for entry in commands_obj:
        if not isinstance(entry, dict):
            raise WireFormatError("each command must be an object")
        try:
            joint = RobotJointName(entry.get("joint"))
        except ValueError as exc:
            raise WireFormatError(f"unknown robot joint {entry.get('joint')!r}") from exc
        commands.append(
            JointCommand(
                joint=joint,
                target_angle=_number(entry, "target"),
                speed=_number(entry, "speed"),
                stamp_us=_require_int(entry, "stamp_us"),
            )
        )
    return CommandBatch(
        stamp_us=_require_int(payload, "stamp_us"), commands=tuple(commands)
    )


def encode_robot_state(state: RobotStateMsg) -> Dict[str, Any]:
    return {
        "stamp_us": state.stamp_us,
        "angles": {joint.value: angle for joint, angle in state.angles.items()},
        "heading": state.heading,
        "position": [state.position[0], state.position[1]],
    }


def decode_robot_state(payload: Mapping[str, Any]) -> RobotStateMsg:
    position = _number_list(payload.get("position"), 2, "position")
    return RobotStateMsg(
        stamp_us=_require_int(payload, "stamp_us"),
        angles=_angles_dict(payload.get("angles")),
        heading=_number(payload, "heading"),
        position=(position[0], position[1]),
    )


def encode_gait_event(event: GaitEvent) -> Dict[str, Any]:
    return {
        "stamp_us": event.stamp_us,
        "event": event.event,
        "leg": event.leg,
        "decision": event.decision,
        "motion": event.motion,
        "direction": event.direction,
        "steps": event.steps,
        "heading_delta": event.heading_delta,
        "displacement": event.displacement,
    }


def decode_gait_event(payload: Mapping[str, Any]) -> GaitEvent:
    event = payload.get("event")
    if not isinstance(event, str) or not event:
        raise WireFormatError("gait_event payload must carry an event name")
    for key in ("leg", "decision", "motion", "direction"):
        value = payload.get(key)
        if value is not None and not isinstance(value, str):
            raise WireFormatError(f"field {key!r} must be a string or null")
    return GaitEvent(
        stamp_us=_require_int(payload, "stamp_us"),
        event=event,
        leg=payload.get("leg"),
        decision=payload.get("decision"),
        motion=payload.get("motion"),
        direction=payload.get("direction"),
        steps=_require_int(payload, "steps"),
        heading_delta=_number(payload, "heading_delta"),
        displacement=_number(payload, "displacement"),
    )


_ENCODERS = {
    SkeletonFrame: ("skeleton_frame", encode_skeleton_frame),
    JointAngleSet: ("joint_angles", encode_joint_angles),
    CommandBatch: ("joint_commands", encode_joint_commands),
    RobotStateMsg: ("robot_state", encode_robot_state),
    GaitEvent: ("gait_event", encode_gait_event),
}

_DECODERS = {
    "skeleton_frame": decode_skeleton_frame,
    "joint_angles": decode_joint_angles,
    "joint_commands": decode_joint_commands,
    "robot_state": decode_robot_state,
    "gait_event": decode_gait_event,
}


def kind_of(message: Message) -> str:
    """The wire kind for a message object, dispatched on its exact type."""
    entry = _ENCODERS.get(type(message))
    if entry is None:
        raise WireFormatError(f"no wire kind for {type(message).__name__}")
    return entry[0]


def encode_payload(message: Message) -> Tuple[str, Dict[str, Any]]:
    entry = _ENCODERS.get(type(message))
    if entry is None:
        raise WireFormatError(f"no wire encoding for {type(message).__name__}")
    kind, encoder = entry
    return kind, encoder(message)


def decode_payload(kind: str, payload: Mapping[str, Any]) -> Message:
    decoder = _DECODERS.get(kind)
    if decoder is None:
        raise WireFormatError(f"unknown payload kind {kind!r}")
    return decoder(payload)
