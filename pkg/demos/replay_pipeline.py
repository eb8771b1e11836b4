"""
A live pipeline run over the bus
================================

"""

import tempfile
import threading
from pathlib import Path

from teleop.bus import Bus
from teleop.pipeline import run_pipeline
from teleop.scenarios import synth_frames
from teleop.streams import replay, write_stream

# Record a synthetic forward step to a stream file, then play it back
# through a live pipeline: frames go in on "skeleton", joint targets and
# gait telemetry come out on the other topics.
with tempfile.TemporaryDirectory() as tmp:
    path = str(Path(tmp) / "step.stream")
    count = write_stream(path, synth_frames("forward_step"))
    print(f"recorded {count} frames")

    bus = Bus()
    angles = bus.subscribe("skel_angles", capacity=256)
    commands = bus.subscribe("commands", capacity=256)
    events = bus.subscribe("gait_events", capacity=64)

    stop = threading.Event()
    ready = threading.Event()
    result = {}

    def service():
        result["stats"] = run_pipeline(bus, stop=stop, ready=ready)

    worker = threading.Thread(target=service)
    worker.start()
    ready.wait()

    # speed is a delay multiplier over the recorded stamps; 0.25 plays
    # the 3 s recording in three quarters of a second
    replay(path, bus, speed=0.25)

    stop.set()
    worker.join()
    bus.close()

    def drained(sub):
        out = []
        while (env := sub.get(timeout=0.0)) is not None:
            out.append(env)
        return out

    got_angles = drained(angles)
    got_commands = drained(commands)
    got_events = drained(events)
    stats = result["stats"]

    print(f"angles out:   {len(got_angles)}")
    print(f"commands out: {len(got_commands)} (last one is the shutdown hold)")
    print(f"gait events:  {[e.payload['event'] for e in got_events]}")
    print(f"pipeline saw {stats.frames_seen} frames, "
          f"started {stats.steps_started} step(s)")

    # every command carries its own speed from the governor
    sample = got_commands[len(got_commands) // 2]
    line = sample.payload["commands"][0]
    print(f"\nmid-run command: {line['joint']} -> {line['target']:.3f} rad "
          f"at {line['speed']:.2f} rad/s")
