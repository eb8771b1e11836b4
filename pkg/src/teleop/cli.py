"""Command line front end tying the nodes together.

    teleop synth forward_step --out step.jsonl
    teleop pipeline --config deploy.ini           # serve bridge + sim + arbiter
    teleop replay step.jsonl --bus 127.0.0.1:7401
    teleop record capture.jsonl --bus 127.0.0.1:7401
    teleop sim --bus 127.0.0.1:7401 --rate 100
    teleop bridge --tcp 7401 --ws 7402            # bare bus hub
    teleop bench-latency step.jsonl

Every command exits 0 on success and nonzero with a one-line
diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import signal
import sys
import threading
from typing import List, Optional, Tuple

from .actuation import run_simulator_node
from .bridge import (
    BridgeError,
    DEFAULT_TCP_PORT,
    DEFAULT_WS_PORT,
    connect_bridge,
    serve_bridge,
)
from .bus import Bus
from .config import AppConfig, ConfigError, dump_default_config, load_config
from .pipeline import run_pipeline
from .scenarios import SCENARIOS, UnknownScenario, synth_stream
from .streams import StreamError, iter_stream, record_from_bus, replay
from .wire import WireFormatError


def _parse_addr(addr: str) -> Tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep:
        host, port = "127.0.0.1", addr
    try:
        return (host or "127.0.0.1", int(port))
    except ValueError:
        raise ValueError(f"bad bus address {addr!r}, expected HOST:PORT") from None


def _install_stop() -> threading.Event:
    stop = threading.Event()

    def handler(signum, frame):
        stop.set()

    try:
        signal.signal(signal.SIGINT, handler)
        signal.signal(signal.SIGTERM, handler)
    except ValueError:
        pass  # not the main thread (tests); stop stays manual
    return stop


def _cmd_synth(args) -> int:
    if args.out is None:
        count = synth_stream(
            args.scenario, sys.stdout, duration_s=args.duration,
            frame_rate_hz=args.rate, turn_angle=args.angle,
        )
        print(f"synth {args.scenario}: {count} frames", file=sys.stderr)
    else:
        count = synth_stream(
            args.scenario, args.out, duration_s=args.duration,
            frame_rate_hz=args.rate, turn_angle=args.angle,
        )
        print(f"synth {args.scenario}: {count} frames -> {args.out}")
    return 0


def _cmd_replay(args) -> int:
    stop = _install_stop()
    bus = Bus()
    conn = None
    try:
        if args.bus is not None:
            host, port = _parse_addr(args.bus)
            conn = connect_bridge(bus, host, port)
        count = replay(args.file, bus, speed=args.speed, stop=stop)
        print(f"replayed {count} frames")
        return 0
    finally:
        if conn is not None:
            conn.close()
        bus.close()


def _cmd_record(args) -> int:
    stop = _install_stop()
    bus = Bus()
    conn = None
    try:
        if args.bus is not None:
            host, port = _parse_addr(args.bus)
            conn = connect_bridge(bus, host, port)
        count = record_from_bus(
            bus, args.file, stop=stop, idle_timeout_s=args.idle_timeout
        )
        print(f"recorded {count} frames -> {args.file}")
        return 0
    finally:
        if conn is not None:
            conn.close()
        bus.close()


def _cmd_pipeline(args) -> int:
    stop = _install_stop()
    cfg = load_config(args.config)
    bus = Bus()
    threads: List[threading.Thread] = []
    server = None
    conn = None
    try:
        if args.bus is not None:
            host, port = _parse_addr(args.bus)
            conn = connect_bridge(bus, host, port)
        else:
            tcp = cfg.bus.tcp_port if args.tcp is None else args.tcp
            ws = cfg.bus.ws_port if args.ws is None else args.ws
            server = serve_bridge(bus, host=cfg.bus.host, tcp_port=tcp, ws_port=ws)
            print(f"bridge: tcp={server.tcp_port} ws={server.ws_port}", flush=True)
        if not args.no_sim:
            t = threading.Thread(
                target=run_simulator_node,
                args=(bus,),
                kwargs={"rate_hz": args.sim_rate, "stop": stop},
                name="simulator",
                daemon=True,
            )
            t.start()
            threads.append(t)
        stats = run_pipeline(
            bus, cfg.pipeline, cfg.limits, dict(cfg.motion_sets), stop=stop
        )
        print(
            f"pipeline: frames={stats.frames_seen} dropped={stats.frames_dropped} "
            f"steps={stats.steps_started} turns={stats.turns_started}"
        )
        return 0
    finally:
        stop.set()
        if server is not None:
            server.close()
        if conn is not None:
            conn.close()
        bus.close()
        for t in threads:
            t.join(timeout=2.0)


def _cmd_sim(args) -> int:
    stop = _install_stop()
    bus = Bus()
    host, port = _parse_addr(args.bus)
    conn = connect_bridge(bus, host, port)
    try:
        run_simulator_node(bus, rate_hz=args.rate, stop=stop)
        return 0
    finally:
        conn.close()
        bus.close()


def _cmd_bridge(args) -> int:
    stop = _install_stop()
    bus = Bus()
    server = serve_bridge(bus, host=args.host, tcp_port=args.tcp, ws_port=args.ws)
    print(f"bridge: tcp={server.tcp_port} ws={server.ws_port}", flush=True)
    try:
        stop.wait()
        return 0
    finally:
        server.close()
        bus.close()


def _cmd_bench_latency(args) -> int:
    frames = list(iter_stream(args.file))
    if not frames:
        print("error: stream file has no frames", file=sys.stderr)
        return 2
    bus = Bus()
    stop = threading.Event()
    ready = threading.Event()
    pipe = threading.Thread(
        target=run_pipeline,
        args=(bus,),
        kwargs={"stop": stop, "ready": ready},
        name="pipeline",
        daemon=True,
    )
    # generous buffers: the measurer must never be the drop source
    skel_sub = bus.subscribe("skeleton", capacity=len(frames) + 16)
    cmd_sub = bus.subscribe("commands", capacity=4 * len(frames) + 16)
    pipe.start()
    ready.wait(timeout=5.0)
    try:
        count = replay(args.file, bus, speed=args.speed, stop=stop)
    finally:
        stop.wait(0.3)  # let the arbiter finish the tail of the stream
        stop.set()
        bus.close()
        pipe.join(timeout=5.0)

    ingress = {}
    while (env := skel_sub.get(timeout=0)) is not None:
        ingress.setdefault(env.payload.get("stamp_us"), env.stamp_us)
    latencies_us = []
    while (env := cmd_sub.get(timeout=0)) is not None:
        t_in = ingress.get(env.payload.get("stamp_us"))
        if t_in is not None:
            latencies_us.append(env.stamp_us - t_in)
    if not latencies_us:
        print("error: no commands matched any frame", file=sys.stderr)
        return 2
    latencies_us.sort()

    def pct(p: float) -> float:
        idx = round(p / 100.0 * (len(latencies_us) - 1))
        return latencies_us[idx] / 1000.0

    print(f"frames={count} matched={len(latencies_us)} drops={skel_sub.dropped + cmd_sub.dropped}")
    print(
        f"latency ms: p50={pct(50):.3f} p90={pct(90):.3f} p95={pct(95):.3f} "
        f"p99={pct(99):.3f} max={latencies_us[-1] / 1000.0:.3f}"
    )
    return 0


def _cmd_config(args) -> int:
    sys.stdout.write(dump_default_config())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleop", description="Skeleton teleoperation pipeline."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic skeleton stream")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--duration", type=float, default=None, help="seconds")
    p.add_argument("--rate", type=float, default=20.0, help="frames per second")
    p.add_argument("--angle", type=float, default=0.6, help="turn angle, radians")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("replay", help="publish a recorded stream")
    p.add_argument("file")
    p.add_argument("--speed", type=float, default=1.0,
                   help="delay multiplier; 0 = as fast as possible")
    p.add_argument("--bus", help="bridge address HOST:PORT to publish into")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("record", help="capture skeleton frames to a file")
    p.add_argument("file")
    p.add_argument("--bus", help="bridge address HOST:PORT to subscribe from")
    p.add_argument("--idle-timeout", type=float, default=None,
                   help="stop after this many idle seconds")
    p.set_defaults(func=_cmd_record)

    p = sub.add_parser("pipeline", help="run the arbiter (serves a bridge by default)")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--bus", help="join an existing bridge instead of serving")
    p.add_argument("--tcp", type=int, default=None, help="bridge TCP port override")
    p.add_argument("--ws", type=int, default=None, help="bridge WebSocket port override")
    p.add_argument("--no-sim", action="store_true", help="do not run the simulator")
    p.add_argument("--sim-rate", type=float, default=100.0, help="simulator Hz")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("sim", help="run the robot simulator against a bridge")
    p.add_argument("--bus", default=f"127.0.0.1:{DEFAULT_TCP_PORT}")
    p.add_argument("--rate", type=float, default=100.0, help="simulation Hz")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("bridge", help="run a bare bus hub")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--tcp", type=int, default=DEFAULT_TCP_PORT)
    p.add_argument("--ws", type=int, default=DEFAULT_WS_PORT)
    p.set_defaults(func=_cmd_bridge)

    p = sub.add_parser("bench-latency", help="frame ingress to command egress percentiles")
    p.add_argument("file")
    p.add_argument("--speed", type=float, default=1.0)
    p.set_defaults(func=_cmd_bench_latency)

    p = sub.add_parser("config", help="print the default configuration")
    p.set_defaults(func=_cmd_config)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        StreamError,
        WireFormatError,
        BridgeError,
        UnknownScenario,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
