"""Exit codes, argument handling and a live run of each long subcommand."""

import re
import signal
import subprocess
import sys
import time

import pytest

from teleop.bridge import connect_bridge
from teleop.bus import Bus
from teleop.cli import _parse_addr, main
from teleop.config import loads_config
from teleop.scenarios import synth_frames
from teleop.streams import iter_stream


class TestParseAddr:
    def test_host_and_port(self):
        assert _parse_addr("10.0.0.5:7000") == ("10.0.0.5", 7000)

    def test_bare_port(self):
        assert _parse_addr("7401") == ("127.0.0.1", 7401)

    def test_empty_host_defaults(self):
        assert _parse_addr(":7401") == ("127.0.0.1", 7401)

    def test_garbage_rejected(self):
        with pytest.raises(ValueError, match="bad bus address"):
            _parse_addr("nonsense")


class TestSynth:
    def test_writes_stream_file(self, tmp_path, capsys):
        out = tmp_path / "step.jsonl"
        assert main(["synth", "forward_step", "--out", str(out)]) == 0
        frames = list(iter_stream(str(out)))
        assert len(frames) == 60
        assert f"60 frames -> {out}" in capsys.readouterr().out

    def test_stdout_default(self, capsys):
        assert main(["synth", "idle", "--duration", "0.5"]) == 0
        captured = capsys.readouterr()
        lines = captured.out.strip().splitlines()
        assert len(lines) == 1 + 10  # header plus frames
        assert "synth idle: 10 frames" in captured.err

    def test_rate_and_angle_pass_through(self, tmp_path):
        out = tmp_path / "turn.jsonl"
        assert main(
            ["synth", "turn", "--out", str(out), "--rate", "40", "--angle", "-1.0"]
        ) == 0
        frames = list(iter_stream(str(out)))
        assert frames[1].stamp_us == 25_000

    def test_unknown_scenario_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "moonwalk"])
        assert exc.value.code == 2
        assert "invalid choice" in capsys.readouterr().err


class TestErrorPaths:
    def test_missing_file_exits_2(self, tmp_path, capsys):
        rc = main(["replay", str(tmp_path / "absent.jsonl")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_bus_address_exits_2(self, tmp_path, capsys):
        stream = tmp_path / "s.jsonl"
        main(["synth", "idle", "--out", str(stream), "--duration", "0.2"])
        rc = main(["replay", str(stream), "--bus", "nonsense"])
        assert rc == 2
        assert "bad bus address" in capsys.readouterr().err

    def test_unreachable_bridge_exits_2(self, capsys):
        rc = main(["sim", "--bus", "127.0.0.1:1"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[nope]\nx = 1\n", encoding="utf-8")
        rc = main(["pipeline", "--config", str(bad)])
        assert rc == 2
        assert "unknown section" in capsys.readouterr().err

    def test_keyboard_interrupt_exits_130(self, monkeypatch):
        def interrupted(*args, **kwargs):
            raise KeyboardInterrupt

        monkeypatch.setattr("teleop.cli.synth_stream", interrupted)
        assert main(["synth", "idle"]) == 130


class TestLocalCommands:
    def test_replay_without_bus(self, tmp_path, capsys):
        stream = tmp_path / "s.jsonl"
        main(["synth", "arm_wave", "--out", str(stream)])
        capsys.readouterr()
        assert main(["replay", str(stream), "--speed", "0"]) == 0
        assert "replayed 40 frames" in capsys.readouterr().out

    def test_record_idle_timeout(self, tmp_path, capsys):
        out = tmp_path / "cap.jsonl"
        assert main(["record", str(out), "--idle-timeout", "0.1"]) == 0
        assert "recorded 0 frames" in capsys.readouterr().out
        assert list(iter_stream(str(out))) == []

    def test_config_dump_parses_back(self, capsys):
        assert main(["config"]) == 0
        text = capsys.readouterr().out
        cfg = loads_config(text)
        assert cfg.pipeline.frame_rate_hz == 20.0

    def test_bench_latency_reports_percentiles(self, tmp_path, capsys):
        stream = tmp_path / "s.jsonl"
        main(["synth", "idle", "--out", str(stream), "--duration", "1.0"])
        capsys.readouterr()
        assert main(["bench-latency", str(stream), "--speed", "0"]) == 0
        out = capsys.readouterr().out
        assert re.search(r"frames=20 matched=\d+ drops=0", out)
        assert "p95=" in out

    def test_bench_latency_empty_stream(self, tmp_path, capsys):
        stream = tmp_path / "empty.jsonl"
        main(["record", str(stream), "--idle-timeout", "0.05"])
        capsys.readouterr()
        assert main(["bench-latency", str(stream)]) == 2
        assert "no frames" in capsys.readouterr().err


def spawn(*args):
    return subprocess.Popen(
        [sys.executable, "-m", "teleop.cli", *args],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )


def read_ports(proc):
    line = proc.stdout.readline()
    m = re.match(r"bridge: tcp=(\d+) ws=(\d+)", line)
    assert m, f"unexpected banner {line!r}"
    return int(m.group(1)), int(m.group(2))


class TestSubprocessCommands:
    def test_pipeline_serves_a_bridge_end_to_end(self):
        proc = spawn("pipeline", "--tcp", "0", "--ws", "0", "--no-sim")
        try:
            tcp, _ = read_ports(proc)
            frames = synth_frames("idle")
            bus = Bus()
            sub = bus.subscribe("commands")
            conn = connect_bridge(bus, "127.0.0.1", tcp)
            try:
                # probe first: proves the arbiter is subscribed and live
                bus.publish("skeleton", frames[0])
                deadline = time.monotonic() + 5.0
                while sub.get(timeout=0.05) is None:
                    assert time.monotonic() < deadline, "no command for probe frame"
                for frame in frames[1:]:
                    bus.publish("skeleton", frame)
                got = 1
                while got < len(frames) and time.monotonic() < deadline:
                    if sub.get(timeout=0.05) is not None:
                        got += 1
                assert got == len(frames)
            finally:
                conn.close()
                bus.close()
            proc.send_signal(signal.SIGINT)
            out, err = proc.communicate(timeout=10.0)
            assert proc.returncode == 0, err
            assert "pipeline: frames=40 dropped=0 steps=0 turns=0" in out
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.communicate()

    def test_bridge_runs_until_terminated(self):
        proc = spawn("bridge", "--tcp", "0", "--ws", "0")
        try:
            tcp, ws = read_ports(proc)
            assert tcp > 0 and ws > 0
            # the hub accepts a peer
            bus = Bus()
            conn = connect_bridge(bus, "127.0.0.1", tcp)
            conn.close()
            bus.close()
            proc.send_signal(signal.SIGTERM)
            out, err = proc.communicate(timeout=10.0)
            assert proc.returncode == 0, err
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.communicate()
