"""Skeleton stream files: recording, replay, validation.

A stream file is line-delimited JSON: a header object first, then one
envelope per frame, exactly as the same frame would appear on the wire.
One format and one codec serve files, sockets and the bus.

    {"format":"teleop-stream/1","frame_rate_hz":20.0,"joints":[...]}
    {"kind":"skeleton_frame","payload":{...},"seq":0,"stamp_us":0,...}

File envelopes are deterministic: seq counts from 0 and the envelope
stamp equals the frame's own stamp, so generating the same frames twice
produces byte-identical files. Replaying onto a bus re-envelopes each
frame with a fresh wall-clock stamp for latency measurement; the frame
payloads are reproduced byte for byte.
"""

from __future__ import annotations

import io
import json
import threading
import time
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, List, Optional, Tuple, Union

from .bus import Bus
from .skeleton import SKELETON_JOINTS, SkeletonFrame
from .wire import (
    Envelope,
    WireFormatError,
    canonical_dumps,
    decode_envelope,
    decode_payload,
    encode_payload,
)

STREAM_FORMAT = "teleop-stream/1"

Source = Union[str, IO[str]]


class StreamError(ValueError):
    """Malformed stream file; the message names the offending line."""


@dataclass(frozen=True)
class StreamHeader:
    frame_rate_hz: float = 20.0
    joints: Tuple[str, ...] = SKELETON_JOINTS

    def encode(self) -> str:
        return canonical_dumps(
            {
                "format": STREAM_FORMAT,
                "frame_rate_hz": self.frame_rate_hz,
                "joints": list(self.joints),
            }
        )


def _decode_header(line: str) -> StreamHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StreamError(f"line 1: header is not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or obj.get("format") != STREAM_FORMAT:
        raise StreamError(
            f"line 1: expected a {STREAM_FORMAT!r} header, got {line.strip()[:80]!r}"
        )
    rate = obj.get("frame_rate_hz")
    if isinstance(rate, bool) or not isinstance(rate, (int, float)) or rate <= 0:
        raise StreamError(f"line 1: frame_rate_hz must be a positive number, got {rate!r}")
    joints = obj.get("joints")
    if joints != list(SKELETON_JOINTS):
        raise StreamError("line 1: joint list does not match the canonical skeleton")
    return StreamHeader(frame_rate_hz=float(rate), joints=tuple(joints))


def _open(source: Source, mode: str):
    if isinstance(source, str):
        return open(source, mode, encoding="utf-8"), True
    return source, False


def write_stream(
    destination: Source,
    frames: Iterable[SkeletonFrame],
    frame_rate_hz: float = 20.0,
) -> int:
    """Write header + frames; returns the frame count.

    Frames must carry strictly increasing stamps; violation aborts with
    the line number the bad frame would have occupied.
    """
    fh, owned = _open(destination, "w")
    try:
        fh.write(StreamHeader(frame_rate_hz=frame_rate_hz).encode() + "\n")
        count = 0
        last_stamp: Optional[int] = None
        for frame in frames:
            line_no = count + 2  # header owns line 1
            if last_stamp is not None and frame.stamp_us <= last_stamp:
                raise StreamError(
                    f"line {line_no}: stamp {frame.stamp_us} not after {last_stamp}"
                )
            last_stamp = frame.stamp_us
            kind, payload = encode_payload(frame)
            envelope = Envelope(
                topic="skeleton",
                seq=count,
                stamp_us=frame.stamp_us,
                kind=kind,
                payload=payload,
            )
            fh.write(envelope.encode() + "\n")
            count += 1
        return count
    finally:
        if owned:
            fh.close()


def iter_stream(source: Source) -> Iterator[SkeletonFrame]:
    """Lazily yield validated frames; raises StreamError at the bad line.

    Frames before a malformed line are yielded normally, so a consumer
    that publishes as it reads keeps everything up to the damage.
    """
    fh, owned = _open(source, "r")
    try:
        header_line = fh.readline()
        if not header_line:
            raise StreamError("line 1: empty file, expected a header")
        _decode_header(header_line)
        last_stamp: Optional[int] = None
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                envelope = decode_envelope(line)
                if envelope.kind != "skeleton_frame":
                    raise WireFormatError(
                        f"expected skeleton_frame, got {envelope.kind!r}"
                    )
                frame = decode_payload(envelope.kind, envelope.payload)
            except WireFormatError as exc:
                raise StreamError(f"line {line_no}: {exc}") from None
            assert isinstance(frame, SkeletonFrame)
            if last_stamp is not None and frame.stamp_us <= last_stamp:
                raise StreamError(
                    f"line {line_no}: stamp {frame.stamp_us} not after {last_stamp}"
                )
            last_stamp = frame.stamp_us
            yield frame
    finally:
        if owned:
            fh.close()


def read_stream(source: Source) -> Tuple[StreamHeader, List[SkeletonFrame]]:
    """Eagerly read and validate a whole stream file."""
    fh, owned = _open(source, "r")
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    buf = io.StringIO(text)
    header = _decode_header(buf.readline() or "")
    buf.seek(0)
    return header, list(iter_stream(buf))


def stream_header(source: Source) -> StreamHeader:
    fh, owned = _open(source, "r")
    try:
        return _decode_header(fh.readline() or "")
    finally:
        if owned:
            fh.close()


def replay(
    source: Source,
    bus: Bus,
    speed: float = 1.0,
    topic: str = "skeleton",
    stop: Optional[threading.Event] = None,
) -> int:
    """Publish a stream file's frames; returns the count published.

    Inter-frame delays are the recorded stamp gaps scaled by `speed`:
    1.0 replays in real time, 0.5 plays twice as fast, 0 publishes
    as fast as possible (the deterministic mode tests use).
    """
    if speed < 0:
        raise ValueError("speed multiplier must be >= 0")
    count = 0
    first_stamp: Optional[int] = None
    t0 = time.monotonic()
    for frame in iter_stream(source):
        if stop is not None and stop.is_set():
            break
        if speed > 0:
            if first_stamp is None:
                first_stamp = frame.stamp_us
            target = t0 + (frame.stamp_us - first_stamp) * speed / 1e6
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        bus.publish(topic, frame)
        count += 1
    return count


def record_from_bus(
    bus: Bus,
    destination: Source,
    stop: Optional[threading.Event] = None,
    frame_rate_hz: float = 20.0,
    idle_timeout_s: Optional[float] = None,
) -> int:
    """Subscribe to "skeleton" and write frames until stopped.

    Stops on bus close, on `stop`, or after idle_timeout_s without a
    frame (None waits forever).
    """
    sub = bus.subscribe("skeleton")

    def frames() -> Iterator[SkeletonFrame]:
        while not (stop is not None and stop.is_set()):
            envelope = sub.get(timeout=idle_timeout_s if idle_timeout_s else 0.2)
            if envelope is None:
                if sub.closed or bus.closed or idle_timeout_s:
                    return
                continue
            frame = decode_payload(envelope.kind, envelope.payload)
            assert isinstance(frame, SkeletonFrame)
            yield frame

    try:
        return write_stream(destination, frames(), frame_rate_hz=frame_rate_hz)
    finally:
        bus.unsubscribe(sub)
