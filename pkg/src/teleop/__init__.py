"""Teleoperation of a simulated 20-DOF humanoid from skeleton streams.

The package is organized as a chain of small modules: `skeleton` and
`robot` define the two body models, `retarget` maps operator arms onto
robot joints, `locomotion` turns leg and torso motion into steps and
turns, `actuation` governs speeds and simulates execution, `pipeline`
arbitrates between imitation and locomotion, and `bus`/`bridge`/
`streams` move frames between processes and files.
"""

from .actuation import (
    CommandBatch,
    JointCommand,
    KinematicSimulator,
    RobotStateMsg,
    SpeedGovernorConfig,
    govern_speed,
    run_simulator_node,
)
from .bridge import BridgeServer, connect_bridge, serve_bridge
from .bus import Bus, Subscription, TopicRegistry
from .config import AppConfig, BusConfig, ConfigError, PipelineConfig, load_config
from .locomotion import (
    GaitConfig,
    GaitEvent,
    GaitState,
    InconsistentState,
    LegState,
    MotionPlayer,
    MotionSet,
    StepDecision,
    decide_step,
    default_motion_sets,
    knee_angle,
    plan_turn,
    play_motion_set,
    update_lift,
)
from .pipeline import Arbiter, ArbiterMode, run_frames, run_pipeline
from .retarget import UpperBodyAngles, UpperBodyRetargeter, retarget_upper_body
from .robot import (
    JointAngleSet,
    JointDescriptor,
    LimitsTable,
    RobotJointName,
    clamp_to_limits,
    limits_table,
    neutral_pose,
)
from .scenarios import SCENARIOS, UnknownScenario, synth_frames, synth_stream
from .skeleton import (
    DegenerateQuaternion,
    DegenerateSegment,
    JointSample,
    MissingJoint,
    Point3,
    Quaternion,
    SkeletonFrame,
    StaleJointFilter,
    Vec3,
    joint_angle,
    quaternion_to_yaw,
    vector_between,
)
from .streams import StreamError, iter_stream, read_stream, replay, write_stream
from .wire import Envelope, PROTOCOL_VERSION, WireFormatError

__version__ = "0.1.0"
