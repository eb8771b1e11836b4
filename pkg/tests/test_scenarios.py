import math

import pytest

from teleop.locomotion import GaitConfig, knee_angle, knee_depth
from teleop.retarget import retarget_upper_body
from teleop.scenarios import (
    SCENARIOS,
    UnknownScenario,
    synth_frames,
    synth_stream,
)
from teleop.skeleton import quaternion_to_yaw, validate_frame_stream
from teleop.streams import read_stream

CFG = GaitConfig()


class TestCatalog:
    def test_names(self):
        assert SCENARIOS == ("idle", "arm_wave", "forward_step", "backward_step", "turn")

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenario):
            synth_frames("moonwalk")

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            synth_frames("idle", frame_rate_hz=0)

    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_every_scenario_is_a_valid_stream(self, scenario):
        frames = synth_frames(scenario)
        assert validate_frame_stream(frames) == len(frames)
        assert frames[0].stamp_us == 0
        for frame in frames:
            assert set(frame.joints) == set(frames[0].joints)
            assert all(s.confidence == 1.0 for s in frame.joints.values())

    def test_default_durations(self):
        assert len(synth_frames("idle")) == 40  # 2 s at 20 fps
        assert len(synth_frames("forward_step")) == 60
        assert len(synth_frames("turn", turn_angle=0.6)) == round((2.0 + 0.7 * 3) * 20)

    def test_stamps_follow_rate(self):
        frames = synth_frames("idle", duration_s=1.0, frame_rate_hz=40.0)
        assert len(frames) == 40
        assert frames[1].stamp_us - frames[0].stamp_us == 25_000


class TestIdle:
    def test_never_crosses_gait_thresholds(self):
        for frame in synth_frames("idle"):
            assert knee_angle(frame, "left") < 1e-9
            assert knee_angle(frame, "right") < 1e-9
            yaw = quaternion_to_yaw(frame.joints["torso"].orientation)
            assert abs(yaw) < 1e-12


class TestArmWave:
    def test_arms_move_but_legs_stay(self):
        frames = synth_frames("arm_wave")
        rolls = []
        for frame in frames:
            out = retarget_upper_body(frame)
            rolls.append(out.shoulder_roll_r)
            assert knee_angle(frame, "left") < 1e-9
            assert knee_angle(frame, "right") < 1e-9
        assert max(rolls) - min(rolls) > 0.5  # the wave actually sweeps

    def test_realizes_requested_angles(self):
        # at t=1.0 s the cosine terms peak: roll 1.1, bend 0.8
        frames = synth_frames("arm_wave")
        out = retarget_upper_body(frames[20])
        assert out.shoulder_roll_r == pytest.approx(1.1, abs=1e-9)
        assert out.elbow_r == pytest.approx(0.8, abs=1e-9)


class TestStepScenarios:
    @pytest.mark.parametrize("scenario", ["forward_step", "backward_step"])
    def test_right_knee_crosses_both_thresholds_once(self, scenario):
        frames = synth_frames(scenario)
        angles = [knee_angle(f, "right") for f in frames]
        assert max(angles) > CFG.knee_lift_threshold
        assert angles[0] < 1e-9
        assert angles[-1] < CFG.knee_place_threshold
        # left leg never participates
        assert all(knee_angle(f, "left") < 1e-9 for f in frames)

    def test_forward_step_places_knee_shallower(self):
        frames = synth_frames("forward_step")
        final = frames[-1]
        diff = knee_depth(final, "right") - knee_depth(final, "left")
        assert diff < -CFG.depth_threshold  # moved toward the sensor

    def test_backward_step_places_knee_deeper(self):
        frames = synth_frames("backward_step")
        final = frames[-1]
        diff = knee_depth(final, "right") - knee_depth(final, "left")
        assert diff > CFG.depth_threshold

    def test_depth_model(self):
        # knee depth = 2.0 - 0.45*sin(alpha); alpha_place=0.3398 gives
        # 0.15 m toward the sensor
        frames = synth_frames("forward_step")
        final_depth = knee_depth(frames[-1], "right")
        assert final_depth == pytest.approx(2.0 - 0.45 * math.sin(0.3398), abs=1e-12)


class TestTurn:
    def test_yaw_ramps_to_requested_angle(self):
        frames = synth_frames("turn", turn_angle=0.6)
        yaws = [quaternion_to_yaw(f.joints["torso"].orientation) for f in frames]
        assert yaws[0] == 0.0
        assert yaws[-1] == pytest.approx(0.6, abs=1e-9)
        assert max(yaws) <= 0.6 + 1e-9

    def test_negative_turn(self):
        frames = synth_frames("turn", turn_angle=-math.pi / 2)
        yaw = quaternion_to_yaw(frames[-1].joints["torso"].orientation)
        assert yaw == pytest.approx(-math.pi / 2, abs=1e-9)

    def test_duration_scales_with_planned_steps(self):
        short = synth_frames("turn", turn_angle=0.3)
        long = synth_frames("turn", turn_angle=-math.pi / 2)
        assert len(long) > len(short)


def test_synth_stream_round_trips(tmp_path):
    path = str(tmp_path / "wave.jsonl")
    count = synth_stream("arm_wave", path, duration_s=1.0)
    header, frames = read_stream(path)
    assert count == len(frames) == 20
    assert header.frame_rate_hz == 20.0
    assert frames == synth_frames("arm_wave", duration_s=1.0)
