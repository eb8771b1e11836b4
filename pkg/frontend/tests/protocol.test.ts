import { describe, expect, it } from "vitest";

import {
  KINDS,
  PROTOCOL_VERSION,
  TOPICS,
  WireFormatError,
  canonicalStringify,
  decodeControl,
  decodeEnvelope,
  decodeLine,
  encodeEnvelope,
  makeHello,
  registryHash,
  validateSkeletonPayload,
  type Envelope,
} from "../src/protocol.js";
import { defaultState, puppetFrame } from "../src/puppet.js";

describe("canonical JSON", () => {
  it("matches the host encoding byte for byte", () => {
    // Expected string produced by the host's canonical encoder.
    const fixture = { b: [1, 2.5, -0.125], a: { z: "x", y: true }, c: null, d: "ué" };
    expect(canonicalStringify(fixture)).toBe(
      '{"a":{"y":true,"z":"x"},"b":[1,2.5,-0.125],"c":null,"d":"u\\u00e9"}',
    );
  });

  it("sorts keys and strips whitespace", () => {
    expect(canonicalStringify({ zz: 1, aa: 2 })).toBe('{"aa":2,"zz":1}');
  });

  it("refuses non-finite numbers", () => {
    expect(() => canonicalStringify({ x: NaN })).toThrow(WireFormatError);
    expect(() => canonicalStringify([Infinity])).toThrow(WireFormatError);
  });

  it("escapes astral characters as surrogate pairs", () => {
    expect(canonicalStringify("\u{1f600}")).toBe('"\\ud83d\\ude00"');
  });
});

describe("registry hash", () => {
  it("reproduces the host's topic table digest", async () => {
    expect(canonicalStringify(TOPICS)).toBe(
      '{"commands":"joint_commands","gait_events":"gait_event",' +
        '"robot_state":"robot_state","skel_angles":"joint_angles",' +
        '"skeleton":"skeleton_frame"}',
    );
    expect(await registryHash()).toBe(
      "2daed4d050108c3d6063d34d89a417ed3ab19f99ca44a6d419eb82753540f507",
    );
  });
});

describe("envelopes", () => {
  const sample: Envelope = {
    topic: "gait_events",
    seq: 3,
    stamp_us: 123456,
    kind: "gait_event",
    payload: { event: "lifted", leg: "right" },
  };

  it("round-trips", () => {
    const text = encodeEnvelope(sample);
    expect(decodeEnvelope(text)).toEqual(sample);
    expect(encodeEnvelope(decodeEnvelope(text))).toBe(text);
  });

  it("knows all five payload kinds", () => {
    expect(KINDS.size).toBe(5);
  });

  it("rejects missing and extra fields", () => {
    const obj = JSON.parse(encodeEnvelope(sample));
    delete obj.kind;
    expect(() => decodeEnvelope(JSON.stringify(obj))).toThrow(/exactly/);
    const extra = { ...JSON.parse(encodeEnvelope(sample)), hop: 1 };
    expect(() => decodeEnvelope(JSON.stringify(extra))).toThrow(/exactly/);
  });

  it("rejects bad field types", () => {
    const base = JSON.parse(encodeEnvelope(sample));
    for (const patch of [
      { seq: -1 },
      { seq: 1.5 },
      { seq: true },
      { stamp_us: "0" },
      { topic: "" },
      { kind: "mystery" },
      { payload: [1, 2] },
      { payload: null },
    ]) {
      const broken = { ...base, ...patch };
      expect(() => decodeEnvelope(JSON.stringify(broken))).toThrow(WireFormatError);
    }
  });

  it("rejects non-object lines", () => {
    expect(() => decodeEnvelope("[1,2]")).toThrow(WireFormatError);
    expect(() => decodeEnvelope("not json")).toThrow(/not valid JSON/);
  });
});

describe("controls", () => {
  it("builds a hello carrying version and registry", () => {
    const hello = makeHello("abc");
    expect(hello).toEqual({ control: "hello", version: PROTOCOL_VERSION, registry: "abc" });
  });

  it("decodes hello and refused, tolerating extra hello keys", () => {
    const hello = decodeControl({ control: "hello", version: "v", registry: "r", note: 1 });
    expect(hello.control).toBe("hello");
    const refused = decodeControl({ control: "refused", reason: "nope" });
    expect(refused.control).toBe("refused");
  });

  it("rejects malformed controls", () => {
    expect(() => decodeControl({ control: "hello", version: 1, registry: "r" })).toThrow(
      WireFormatError,
    );
    expect(() => decodeControl({ control: "refused" })).toThrow(WireFormatError);
    expect(() => decodeControl({ control: "bye" })).toThrow(/unknown control/);
  });

  it("routes lines to controls or envelopes", () => {
    const line = '{"control":"refused","reason":"r"}';
    const decoded = decodeLine(line);
    expect("control" in decoded).toBe(true);
    const env = decodeLine(encodeEnvelope(sampleEnvelope()));
    expect("control" in env).toBe(false);
  });
});

function sampleEnvelope(): Envelope {
  return {
    topic: "skeleton",
    seq: 0,
    stamp_us: 1,
    kind: "skeleton_frame",
    payload: puppetFrame(defaultState(), 1) as unknown as Record<string, unknown>,
  };
}

describe("skeleton payload validation", () => {
  it("accepts a puppet frame", () => {
    expect(() => validateSkeletonPayload(puppetFrame(defaultState(), 0))).not.toThrow();
  });

  it("rejects a missing joint by name", () => {
    const frame = puppetFrame(defaultState(), 0);
    delete frame.joints.left_knee;
    expect(() => validateSkeletonPayload(frame)).toThrow(/left_knee/);
  });

  it("rejects an unexpected joint", () => {
    const frame = puppetFrame(defaultState(), 0);
    frame.joints.tail = frame.joints.head;
    expect(() => validateSkeletonPayload(frame)).toThrow(/tail/);
  });

  it("rejects bad joint data", () => {
    for (const patch of [
      { pos: [0, 1] },
      { pos: [0, 1, NaN] },
      { quat: [0, 0, 0, 0] },
      { quat: [1, 0, 0] },
      { conf: 1.5 },
      { conf: -0.1 },
      { conf: "high" },
    ] as const) {
      const frame = puppetFrame(defaultState(), 0);
      frame.joints.torso = { ...frame.joints.torso, ...(patch as object) };
      expect(() => validateSkeletonPayload(frame)).toThrow(WireFormatError);
    }
  });

  it("rejects a fractional stamp", () => {
    const frame = puppetFrame(defaultState(), 0);
    frame.stamp_us = 0.5;
    expect(() => validateSkeletonPayload(frame)).toThrow(/stamp_us/);
  });
});
