"""INI configuration for the pipeline, gait, limits and motion sets.

One file configures a whole deployment. Every key is optional; missing
keys keep built-in defaults, unknown sections or keys are rejected so
typos fail loudly instead of silently running defaults.

    [pipeline]
    frame_rate_hz = 20
    imitation_interval_frames = 1
    starvation_timeout_s = 1.0

    [governor]
    base_speed_rad_s = 1.0

    [gait]
    knee_lift_threshold = 0.7
    ... (any GaitConfig field)

    [bus]
    host = 127.0.0.1
    tcp_port = 7401
    ws_port = 7402

    [limits]
    # joint = min max   (radians; unlisted joints keep built-in ranges)
    right_elbow = 0.0 2.6

    [motion_set.forward_step_left]
    displacement = 0.12
    heading_delta = 0.0
    keyframes =
        300 left_hip_pitch=0.4 left_knee=-0.6
        300 left_hip_pitch=0.0 left_knee=0.0

Each keyframe line is a hold duration in milliseconds followed by
joint=radians pairs. Motion sets defined here replace same-named
built-ins and are validated against the (possibly overridden) limits.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Mapping, Optional, Tuple

from .actuation import SpeedGovernorConfig
from .bridge import DEFAULT_TCP_PORT, DEFAULT_WS_PORT
from .locomotion import GaitConfig, Keyframe, MotionSet, default_motion_sets
from .robot import LimitsTable, RobotJointName, default_table


class ConfigError(ValueError):
    """Unreadable or inconsistent configuration; message names the key."""


@dataclass(frozen=True)
class BusConfig:
    host: str = "127.0.0.1"
    tcp_port: int = DEFAULT_TCP_PORT
    ws_port: int = DEFAULT_WS_PORT


@dataclass(frozen=True)
class PipelineConfig:
    frame_rate_hz: float = 20.0
    imitation_interval_frames: int = 1
    starvation_timeout_s: float = 1.0
    governor: SpeedGovernorConfig = field(default_factory=SpeedGovernorConfig)
    gait: GaitConfig = field(default_factory=GaitConfig)

    def __post_init__(self):
        if not self.frame_rate_hz > 0:
            raise ValueError("frame_rate_hz must be positive")
        if self.imitation_interval_frames < 1:
            raise ValueError("imitation_interval_frames must be >= 1")
        if not self.starvation_timeout_s > 0:
            raise ValueError("starvation_timeout_s must be positive")


@dataclass(frozen=True)
class AppConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    bus: BusConfig = field(default_factory=BusConfig)
    limits: LimitsTable = field(default_factory=default_table)
    motion_sets: Mapping[str, MotionSet] = field(default_factory=default_motion_sets)


_KNOWN_SECTIONS = ("pipeline", "governor", "gait", "bus", "limits")
_MOTION_PREFIX = "motion_set."


def _get_typed(parser, section: str, key: str, cast, current):
    if not parser.has_option(section, key):
        return current
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _apply_section(parser, section: str, obj, casts: Mapping[str, type]):
    if not parser.has_section(section):
        return obj
    for key in parser.options(section):
        if key not in casts:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
    updates = {
        key: _get_typed(parser, section, key, cast, getattr(obj, key))
        for key, cast in casts.items()
    }
    try:
        return replace(obj, **updates)
    except ValueError as exc:
        raise ConfigError(f"section [{section}]: {exc}") from None


def _parse_limits(parser, table: LimitsTable) -> LimitsTable:
    if not parser.has_section("limits"):
        return table
    overrides: Dict[RobotJointName, Tuple[float, float]] = {}
    for key in parser.options("limits"):
        try:
            joint = RobotJointName(key)
        except ValueError:
            raise ConfigError(f"[limits] unknown joint {key!r}") from None
        raw = parser.get("limits", key)
        parts = raw.split()
        if len(parts) != 2:
            raise ConfigError(f"[limits] {key} must be 'min max', got {raw!r}")
        try:
            overrides[joint] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ConfigError(f"[limits] {key}: non-numeric bound in {raw!r}") from None
    descriptors = []
    for d in table:
        if d.name in overrides:
            lo, hi = overrides[d.name]
            try:
                d = replace(d, theta_min=lo, theta_max=hi)
            except ValueError as exc:
                raise ConfigError(f"[limits] {d.name.value}: {exc}") from None
        descriptors.append(d)
    return LimitsTable(descriptors)


def _parse_keyframes(section: str, raw: str) -> Tuple[Keyframe, ...]:
    frames = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            hold_ms = float(tokens[0])
        except ValueError:
            raise ConfigError(
                f"[{section}] keyframe line {line_no}: first token must be hold ms"
            ) from None
        angles: Dict[RobotJointName, float] = {}
        for token in tokens[1:]:
            name, sep, value = token.partition("=")
            if not sep:
                raise ConfigError(
                    f"[{section}] keyframe line {line_no}: expected joint=radians, "
                    f"got {token!r}"
                )
            try:
                joint = RobotJointName(name)
            except ValueError:
                raise ConfigError(
                    f"[{section}] keyframe line {line_no}: unknown joint {name!r}"
                ) from None
            try:
                angles[joint] = float(value)
            except ValueError:
                raise ConfigError(
                    f"[{section}] keyframe line {line_no}: bad angle {value!r}"
                ) from None
        try:
            frames.append(Keyframe(angles=angles, hold_ms=hold_ms))
        except ValueError as exc:
            raise ConfigError(f"[{section}] keyframe line {line_no}: {exc}") from None
    if not frames:
        raise ConfigError(f"[{section}] has no keyframe lines")
    return tuple(frames)


def _parse_motion_sets(parser, limits: LimitsTable) -> Dict[str, MotionSet]:
    sets = default_motion_sets()
    for section in parser.sections():
        if not section.startswith(_MOTION_PREFIX):
            continue
        name = section[len(_MOTION_PREFIX):]
        if not name:
            raise ConfigError("motion_set section needs a name after the dot")
        heading = 0.0
        disp = 0.0
        keyframes: Optional[Tuple[Keyframe, ...]] = None
        for key in parser.options(section):
            raw = parser.get(section, key)
            if key == "heading_delta":
                heading = _get_typed(parser, section, key, float, 0.0)
            elif key == "displacement":
                disp = _get_typed(parser, section, key, float, 0.0)
            elif key == "keyframes":
                keyframes = _parse_keyframes(section, raw)
            else:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
        if keyframes is None:
            raise ConfigError(f"[{section}] must define keyframes")
        mset = MotionSet(
            name=name, keyframes=keyframes, heading_delta=heading, displacement=disp
        )
        mset.validate(limits)
        sets[name] = mset
    # built-ins must also satisfy any narrowed limits
    for mset in sets.values():
        mset.validate(limits)
    return sets


def loads_config(text: str) -> AppConfig:
    """Parse configuration text; missing keys keep defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # joint names are case-sensitive keys
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None

    for section in parser.sections():
        if section not in _KNOWN_SECTIONS and not section.startswith(_MOTION_PREFIX):
            raise ConfigError(f"unknown section [{section}]")

    governor = _apply_section(
        parser, "governor", SpeedGovernorConfig(), {"base_speed_rad_s": float}
    )
    gait = _apply_section(
        parser,
        "gait",
        GaitConfig(),
        {
            "knee_lift_threshold": float,
            "knee_place_threshold": float,
            "depth_threshold": float,
            "yaw_threshold": float,
            "turn_step_quantum": float,
            "max_turn_steps": int,
            "yaw_settle_frames": int,
            "yaw_settle_tol": float,
        },
    )
    pipeline = _apply_section(
        parser,
        "pipeline",
        PipelineConfig(governor=governor, gait=gait),
        {
            "frame_rate_hz": float,
            "imitation_interval_frames": int,
            "starvation_timeout_s": float,
        },
    )
    bus = _apply_section(
        parser,
        "bus",
        BusConfig(),
        {"host": str, "tcp_port": int, "ws_port": int},
    )
    limits = _parse_limits(parser, default_table())
    motion_sets = _parse_motion_sets(parser, limits)
    return AppConfig(pipeline=pipeline, bus=bus, limits=limits, motion_sets=motion_sets)


def load_config(path: Optional[str] = None) -> AppConfig:
    """Read a config file; path None means all defaults."""
    if path is None:
        return AppConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return loads_config(text)


def dump_default_config() -> str:
    """The full schema with every built-in value written out."""
    out = io.StringIO()
    defaults = AppConfig()
    p = defaults.pipeline

    out.write("# Teleoperation pipeline configuration. All keys optional;\n")
    out.write("# omitted keys keep these built-in values.\n\n")
    out.write("[pipeline]\n")
    out.write(f"frame_rate_hz = {p.frame_rate_hz}\n")
    out.write(f"imitation_interval_frames = {p.imitation_interval_frames}\n")
    out.write(f"starvation_timeout_s = {p.starvation_timeout_s}\n\n")

    out.write("[governor]\n")
    out.write(f"base_speed_rad_s = {p.governor.base_speed_rad_s}\n\n")

    out.write("[gait]\n")
    for f in fields(GaitConfig):
        out.write(f"{f.name} = {getattr(p.gait, f.name)}\n")
    out.write("\n[bus]\n")
    out.write(f"host = {defaults.bus.host}\n")
    out.write(f"tcp_port = {defaults.bus.tcp_port}\n")
    out.write(f"ws_port = {defaults.bus.ws_port}\n\n")

    out.write("[limits]\n")
    out.write("# joint = min max (radians)\n")
    for d in sorted(defaults.limits, key=lambda d: d.number):
        out.write(f"{d.name.value} = {d.theta_min!r} {d.theta_max!r}\n")
    out.write("\n")

    for name, mset in defaults.motion_sets.items():
        out.write(f"[motion_set.{name}]\n")
        out.write(f"heading_delta = {mset.heading_delta!r}\n")
        out.write(f"displacement = {mset.displacement!r}\n")
        out.write("keyframes =\n")
        for kf in mset.keyframes:
            pairs = " ".join(
                f"{joint.value}={angle!r}" for joint, angle in kf.angles.items()
            )
            out.write(f"    {kf.hold_ms:g} {pairs}\n")
        out.write("\n")
    return out.getvalue()
