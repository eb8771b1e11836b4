"""Acceptance gate: one test per shipping criterion.

Each test prints a single [PASS]/[FAIL] checklist line with its runtime
against the budget it must meet.  The lines go to the real stdout so the
checklist survives pytest's capture; everything else is ordinary asserts.

The browser console ships separately under frontend/ with its own test
suite; every check here runs with no console present.

The latency criterion replays a minute of stream in real time, so a full
run of this module takes a bit over a minute.
"""

import json
import math
import random
import re
import threading
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from teleop.actuation import (
    CommandBatch,
    JointCommand,
    KinematicSimulator,
    RobotStateMsg,
    SpeedGovernorConfig,
    govern_speed,
)
from teleop.bridge import RegistryMismatch, connect_bridge, serve_bridge
from teleop.bus import Bus, TopicRegistry
from teleop.cli import main as cli_main
from teleop.locomotion import GaitConfig, GaitEvent, GaitState, LegState, decide_step
from teleop.pipeline import run_frames, run_pipeline
from teleop.robot import JointAngleSet, RobotJointName, default_table
from teleop.scenarios import SCENARIOS, synth_frames
from teleop.skeleton import Point3, SkeletonFrame, joint_angle
from teleop.streams import iter_stream, write_stream
from teleop.wire import canonical_dumps, decode_payload, encode_payload

from helpers import make_frame, random_frame
from test_locomotion import DEPTH_DIFFS, STATE_NAMES, reference_step_decision


CHECKLIST = []


def _record(line):
    CHECKLIST.append(line)  # conftest replays these after the run
    print(line, flush=True)


@contextmanager
def criterion(name, budget_s):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        _record(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= budget_s:
        _record(f"[FAIL] {name} ({elapsed:.2f}s, budget {budget_s:.0f}s)")
        raise AssertionError(f"{name}: {elapsed:.2f}s blew the {budget_s:.0f}s budget")
    _record(f"[PASS] {name} ({elapsed:.2f}s < {budget_s:.0f}s)")


# --- criterion 1: joint-angle geometry ---------------------------------

def _random_rotations(rng, count):
    """Proper rotation matrices from QR with the sign ambiguity fixed."""
    mats = []
    while len(mats) < count:
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        mats.append(q)
    return np.stack(mats)


def test_joint_angle_geometry():
    with criterion("joint-angle geometry", budget_s=5.0):
        for (a, b, c), want in (
            (((0, 1, 0), (0, 0, 0), (1, 0, 0)), math.pi / 2),
            (((0, 2, 0), (0, 1, 0), (0, 0, 0)), 0.0),
            (((0, 1, 0), (0, 0, 0), (0, 1, 0)), math.pi),
        ):
            got = joint_angle(Point3(*a), Point3(*b), Point3(*c))
            assert abs(got - want) <= 1e-12

        n = 100_000
        rng = np.random.default_rng(0xA11CE)
        pts = rng.uniform(-3.0, 3.0, size=(n, 3, 3))
        # seeded draw; confirm nothing landed near the degeneracy guard
        seg = np.minimum(
            np.linalg.norm(pts[:, 0] - pts[:, 1], axis=1),
            np.linalg.norm(pts[:, 1] - pts[:, 2], axis=1),
        )
        assert float(seg.min()) > 1e-3

        rot = _random_rotations(rng, 16)
        shift = rng.uniform(-5.0, 5.0, size=(16, 3))
        scale = rng.uniform(0.25, 4.0, size=16)
        pick = np.arange(n) % 16
        moved = np.einsum("nij,nkj->nki", rot[pick], pts) + shift[pick][:, None, :]
        scaled = pts * scale[pick][:, None, None]

        base_rows = pts.tolist()
        moved_rows = moved.tolist()
        scaled_rows = scaled.tolist()
        for i in range(n):
            a, b, c = (Point3(*p) for p in base_rows[i])
            theta = joint_angle(a, b, c)
            assert 0.0 <= theta <= math.pi
            assert abs(joint_angle(c, b, a) - theta) <= 1e-12
            am, bm, cm = (Point3(*p) for p in moved_rows[i])
            assert abs(joint_angle(am, bm, cm) - theta) <= 1e-9
            asc, bsc, csc = (Point3(*p) for p in scaled_rows[i])
            assert abs(joint_angle(asc, bsc, csc) - theta) <= 1e-9


# --- criterion 2: speed governor ----------------------------------------

def test_speed_governor_response():
    with criterion("speed governor", budget_s=2.0):
        cfg = SpeedGovernorConfig()
        base = cfg.base_speed_rad_s

        # exact endpoints, no tolerance
        assert govern_speed(cfg, 0.3, 0.3) == base
        assert govern_speed(cfg, math.pi, 0.0) == 2 * base
        assert govern_speed(cfg, -4.0, 2.0) == 2 * base  # beyond-pi cap
        fast = SpeedGovernorConfig(base_speed_rad_s=50.0)
        assert govern_speed(fast, math.pi / 2, 0.0) == 75.0

        n = 100_000
        rng = np.random.default_rng(0xB0B)
        new = rng.uniform(-7.0, 7.0, n)
        prev = rng.uniform(-7.0, 7.0, n)
        omega = np.fromiter(
            (govern_speed(cfg, float(a), float(b)) for a, b in zip(new, prev)),
            dtype=float,
            count=n,
        )
        assert float(omega.min()) >= base
        assert float(omega.max()) <= 2 * base
        # nondecreasing in the raw swing, cap region included
        order = np.argsort(np.abs(new - prev))
        assert np.all(np.diff(omega[order]) >= 0.0)


# --- criterion 3: step-decision logic ------------------------------------

LEG_NAME_OF = {v: k for k, v in STATE_NAMES.items()}


def test_step_decision_against_reference():
    with criterion("step-decision logic", budget_s=5.0):
        cfg = GaitConfig()

        # every reachable and unreachable cell against the line-by-line
        # reference transcription
        import itertools

        cells = 0
        for initial, marked_name, unmarked_name, marked_leg, diff in itertools.product(
            (True, False),
            ("forward", "back", "null"),
            ("forward", "back", "null"),
            ("left", "right"),
            DEPTH_DIFFS,
        ):
            unmarked_leg = "right" if marked_leg == "left" else "left"
            legs = {
                marked_leg: STATE_NAMES[marked_name],
                unmarked_leg: STATE_NAMES[unmarked_name],
            }
            state = GaitState(
                initial_state=initial,
                left_state=legs["left"],
                right_state=legs["right"],
                marked_leg=marked_leg,
            )
            want_action, want_initial, want_marked, want_unmarked = (
                reference_step_decision(initial, marked_name, diff, 0.0,
                                        cfg.depth_threshold)
            )
            try:
                decision, new_state = decide_step(state, cfg, diff, 0.0)
                got_action = decision.action
            except Exception:
                got_action = "error"
                decision = new_state = None
            assert got_action == want_action, (initial, marked_name, unmarked_name,
                                               marked_leg, diff)
            if got_action == "error":
                cells += 1
                continue
            if want_action == "none":
                assert new_state == state
            else:
                assert decision.leg == marked_leg
                assert new_state.initial_state == want_initial
                assert new_state.leg_state(marked_leg) is STATE_NAMES[want_marked]
                assert new_state.leg_state(unmarked_leg) is STATE_NAMES[want_unmarked]
            cells += 1
        assert cells == 252

        # invariants over random valid sequences: the neutral flag always
        # mirrors the leg states, and any two steps return to neutral
        rng = random.Random(0xD1CE)
        for _ in range(10_000):
            state = GaitState(
                initial_state=True,
                left_state=LegState.NULL,
                right_state=LegState.NULL,
                marked_leg="left",
            )
            steps_taken = 0
            for _ in range(rng.randint(1, 6)):
                if state.initial_state:
                    leg = rng.choice(("left", "right"))
                else:
                    leg = ("left" if state.left_state is not LegState.NULL
                           else "right")
                state = replace(state, marked_leg=leg)
                if rng.random() < 0.5:
                    diff = rng.choice(DEPTH_DIFFS)
                else:
                    diff = rng.uniform(-0.3, 0.3)
                want = reference_step_decision(
                    state.initial_state, LEG_NAME_OF[state.leg_state(leg)],
                    diff, 0.0, cfg.depth_threshold)[0]
                decision, new_state = decide_step(state, cfg, diff, 0.0)
                assert decision.action == want
                both_null = (new_state.left_state is LegState.NULL
                             and new_state.right_state is LegState.NULL)
                assert new_state.initial_state == both_null
                if decision.action == "none":
                    assert new_state == state
                else:
                    steps_taken += 1
                    if steps_taken % 2 == 0:
                        assert new_state.initial_state
                    else:
                        assert not new_state.initial_state
                state = new_state


# --- criterion 4: joint-limit conformance --------------------------------

def _assert_within_limits(table, emitted):
    commands = 0
    for topic, message in emitted:
        if topic == "commands":
            for cmd in message.commands:
                assert table.in_range(cmd.joint, cmd.target_angle), cmd
                assert cmd.speed > 0.0
            commands += len(message.commands)
        elif topic == "skel_angles":
            message.validate(table)
    return commands


def test_every_command_respects_limits():
    with criterion("joint-limit conformance", budget_s=10.0):
        table = default_table()
        checked = 0
        for name in SCENARIOS:
            checked += _assert_within_limits(table, run_frames(synth_frames(name)))
        checked += _assert_within_limits(
            table, run_frames(synth_frames("turn", turn_angle=-math.pi / 2)))

        rng = random.Random(0xC0FFEE)
        wild = [random_frame(rng, stamp_us=i * 50_000) for i in range(10_000)]
        checked += _assert_within_limits(table, run_frames(wild))
        assert checked > 20_000

        joints = list(RobotJointName)
        for _ in range(10_000):
            joint = rng.choice(joints)
            once = table.clamp(joint, rng.uniform(-12.0, 12.0))
            assert table.clamp(joint, once) == once
            assert table.in_range(joint, once)


# --- criterion 5: imitation yields to locomotion --------------------------

ARM_JOINTS = ("left_elbow", "left_hand", "right_elbow", "right_hand")


def test_imitation_muted_while_stepping():
    with criterion("imitation yields to locomotion", budget_s=10.0):
        wave = synth_frames("arm_wave", duration_s=3.0)
        step = synth_frames("forward_step")
        assert len(wave) == len(step) == 60
        merged = []
        for w, s in zip(wave, step):
            joints = dict(s.joints)
            for name in ARM_JOINTS:
                joints[name] = w.joints[name]
            merged.append(SkeletonFrame(stamp_us=s.stamp_us, joints=joints))

        out = run_frames(merged)
        events = [m for t, m in out if t == "gait_events"]
        assert [m.event for m in events] == [
            "lifted", "placed", "step", "locomotion_started",
            "motion_finished", "locomotion_finished",
        ]
        start = next(m.stamp_us for m in events if m.event == "locomotion_started")
        end = next(m.stamp_us for m in events if m.event == "locomotion_finished")
        assert end - start == 900_000
        assert next(m for m in events if m.event == "motion_finished").motion == \
            "forward_step_right"

        stamps = [m.stamp_us for t, m in out if t == "skel_angles"]
        assert len([s for s in stamps if s < start]) >= 20
        assert [s for s in stamps if start <= s <= end] == []
        after = [s for s in stamps if s > end]
        assert after and after[0] == end + 50_000
        assert after.count(end + 50_000) == 1

        # the operator kept waving inside the muted window
        inside = [f for f in merged if start <= f.stamp_us <= end]
        assert len(inside) >= 15
        first = inside[0].joints["right_hand"].position
        last = inside[-1].joints["right_hand"].position
        moved = math.dist((first.x, first.y, first.z), (last.x, last.y, last.z))
        assert moved > 0.05


# --- criterion 6: turn quantization ---------------------------------------

def _run_turn(angle):
    out = run_frames(synth_frames("turn", turn_angle=angle))
    events = [m for t, m in out if t == "gait_events"]
    turns = [m for m in events if m.event == "turn"]
    finished = [m for m in events if m.event == "motion_finished"]
    sim = KinematicSimulator()
    for m in finished:
        sim.apply_pose_delta(m.heading_delta, m.displacement)
    return turns, finished, sim


def test_turns_quantize_to_whole_steps():
    with criterion("turn quantization", budget_s=10.0):
        quantum = GaitConfig().turn_step_quantum

        turns, finished, sim = _run_turn(0.6)
        assert len(turns) == 1
        assert (turns[0].direction, turns[0].steps) == ("left", 2)
        assert [m.motion for m in finished] == ["turn_left", "turn_left"]
        assert abs(sim.heading - 0.6) <= quantum + 1e-12
        assert sim.position == (0.0, 0.0)

        turns, finished, sim = _run_turn(-math.pi / 2)
        assert len(turns) == 1
        assert (turns[0].direction, turns[0].steps) == ("right", 6)
        assert [m.motion for m in finished] == ["turn_right"] * 6
        assert abs(sim.heading + math.pi / 2) <= quantum + 1e-12


# --- criterion 7: latency and determinism ----------------------------------

def _lockstep_replay(path):
    """Replay through a live pipeline one frame at a time.

    Waiting for each frame's own command batch keeps the arbiter's inbox
    at depth one, so buffer policy never engages and the logs depend on
    nothing but the stream.
    """
    bus = Bus()
    subs = {
        "skel_angles": bus.subscribe("skel_angles", capacity=1400),
        "commands": bus.subscribe("commands", capacity=1400),
        "gait_events": bus.subscribe("gait_events", capacity=64),
    }
    logs = {topic: [] for topic in subs}

    def drain():
        for topic, sub in subs.items():
            while (env := sub.get(timeout=0.0)) is not None:
                logs[topic].append((env.kind, canonical_dumps(env.payload)))

    stop, ready = threading.Event(), threading.Event()
    box = {}

    def work():
        box["stats"] = run_pipeline(bus, stop=stop, ready=ready)

    thread = threading.Thread(target=work, daemon=True)
    thread.start()
    assert ready.wait(5.0)

    sent = 0
    for frame in iter_stream(path):
        bus.publish("skeleton", frame)
        sent += 1
        deadline = time.monotonic() + 5.0
        while len(logs["commands"]) < sent:
            drain()
            if len(logs["commands"]) >= sent:
                break
            assert time.monotonic() < deadline, f"no commands for frame {sent}"
            time.sleep(0.0005)
    stop.set()
    thread.join(5.0)
    assert not thread.is_alive()
    drain()  # trailing hold
    bus.close()
    assert all(sub.dropped == 0 for sub in subs.values())
    return logs, box["stats"]


def test_latency_budget_and_determinism(tmp_path, capsys):
    with criterion("latency and determinism", budget_s=90.0):
        path = str(tmp_path / "idle60.stream")
        frames = synth_frames("idle", duration_s=60.0)
        assert len(frames) == 1200
        write_stream(path, frames)

        # real-time replay; every frame must come back out within budget
        assert cli_main(["bench-latency", path]) == 0
        out = capsys.readouterr().out
        counts = re.search(r"frames=(\d+) matched=(\d+) drops=(\d+)", out)
        assert counts, out
        total, matched, drops = map(int, counts.groups())
        assert total == 1200
        assert matched >= 1200
        assert drops == 0
        p95 = re.search(r"p95=([0-9.]+)", out)
        assert p95, out
        assert float(p95.group(1)) < 50.0

        first_logs, first_stats = _lockstep_replay(path)
        second_logs, second_stats = _lockstep_replay(path)
        assert first_stats == second_stats
        assert first_stats.frames_seen == 1200
        assert first_stats.frames_dropped == 0
        assert len(first_logs["skel_angles"]) == 1200
        assert len(first_logs["commands"]) == 1201  # plus the shutdown hold
        assert first_logs == second_logs


# --- criterion 8: wire exactness and bus delivery ---------------------------

FIFO_TOPICS = ("skeleton", "skel_angles", "commands", "gait_events")


def _fifo_payload(topic, seq):
    if topic == "skeleton":
        return make_frame(stamp_us=seq)
    if topic == "skel_angles":
        return JointAngleSet(stamp_us=seq,
                             angles={RobotJointName.RIGHT_ELBOW: 0.3})
    if topic == "commands":
        return CommandBatch(stamp_us=seq, commands=(
            JointCommand(joint=RobotJointName.HEAD_YAW, target_angle=0.1,
                         speed=1.0, stamp_us=seq),))
    return GaitEvent(stamp_us=seq, event="step", leg="left", decision="forward")


def test_wire_roundtrip_and_fifo_delivery():
    with criterion("wire exactness and bus FIFO", budget_s=10.0):
        rng = random.Random(0x5EED)
        samples = [
            random_frame(rng, stamp_us=11),
            make_frame(stamp_us=7, torso_yaw=0.5),
            JointAngleSet(stamp_us=3, angles={
                RobotJointName.RIGHT_ELBOW: 5 * math.pi / 6,
                RobotJointName.HEAD_PITCH: -math.pi / 3,
                RobotJointName.LEFT_KNEE: 1e-17,
            }),
            CommandBatch(stamp_us=5, commands=(
                JointCommand(joint=RobotJointName.LEFT_HIP_PITCH,
                             target_angle=-1 / 3, speed=math.sqrt(3), stamp_us=5),
                JointCommand(joint=RobotJointName.HEAD_YAW,
                             target_angle=0.25, speed=1.0, stamp_us=5),
            )),
            GaitEvent(stamp_us=9, event="step", leg="left", decision="forward"),
            GaitEvent(stamp_us=10, event="motion_finished", motion="turn_left",
                      heading_delta=0.26, displacement=0.0),
            RobotStateMsg(stamp_us=13,
                          angles={RobotJointName.RIGHT_KNEE: 0.7331},
                          heading=-2.718281828459045, position=(0.1, -7.25)),
        ]
        kinds = set()
        for message in samples:
            kind, payload = encode_payload(message)
            kinds.add(kind)
            line = canonical_dumps(payload)
            back = decode_payload(kind, json.loads(line))
            assert back == message
            kind2, payload2 = encode_payload(back)
            assert kind2 == kind
            assert canonical_dumps(payload2) == line
        assert len(kinds) == 5

        # four publishers, four subscribers, one real socket hop; order
        # must hold per topic at every subscriber
        per_topic = 150
        hub = Bus()
        server = serve_bridge(hub, tcp_port=0, ws_port=None)
        clients = []
        try:
            for _ in range(4):
                client = Bus()
                subs = {t: client.subscribe(t, capacity=per_topic + 16)
                        for t in FIFO_TOPICS}
                conn = connect_bridge(client, port=server.tcp_port)
                clients.append((client, subs, conn))

            barrier = threading.Barrier(len(FIFO_TOPICS))

            def publish(topic):
                barrier.wait()
                for seq in range(per_topic):
                    hub.publish(topic, _fifo_payload(topic, seq))

            writers = [threading.Thread(target=publish, args=(t,))
                       for t in FIFO_TOPICS]
            for w in writers:
                w.start()
            for w in writers:
                w.join(10.0)
                assert not w.is_alive()

            for _, subs, _ in clients:
                for topic in FIFO_TOPICS:
                    got = []
                    deadline = time.monotonic() + 10.0
                    while len(got) < per_topic:
                        env = subs[topic].get(timeout=0.25)
                        if env is not None:
                            got.append(decode_payload(env.kind, env.payload))
                        assert time.monotonic() < deadline, \
                            f"{topic}: {len(got)}/{per_topic}"
                    assert [m.stamp_us for m in got] == list(range(per_topic))
                    assert subs[topic].dropped == 0

            # a bus whose registry disagrees must be turned away
            skinny = Bus(TopicRegistry({"gait_events": "gait_event"}))
            with pytest.raises(RegistryMismatch):
                connect_bridge(skinny, port=server.tcp_port, timeout=2.0)
            skinny.close()
        finally:
            for client, _, conn in clients:
                conn.close()
                client.close()
            server.close()
            hub.close()
