/**
 * Wire protocol client side: versioned envelopes, the hello handshake
 * and payload validation.
 *
 * Canonical JSON here must match the host byte for byte where bytes
 * matter: sorted keys, no whitespace, ASCII-escaped strings, non-finite
 * numbers refused. The topic registry hash is a SHA-256 over that
 * canonical form, so any divergence shows up as a refused handshake.
 */

export const PROTOCOL_VERSION = "teleop/1";

/** Topic name to payload kind, the shared registry both ends hash. */
export const TOPICS: Record<string, string> = {
  skeleton: "skeleton_frame",
  skel_angles: "joint_angles",
  commands: "joint_commands",
  robot_state: "robot_state",
  gait_events: "gait_event",
};

export const KINDS: ReadonlySet<string> = new Set(Object.values(TOPICS));

export class WireFormatError extends Error {}

export interface Envelope {
  topic: string;
  seq: number;
  stamp_us: number;
  kind: string;
  payload: Record<string, unknown>;
}

export type HelloControl = { control: "hello"; version: string; registry: string };
export type RefusedControl = { control: "refused"; reason: string };
export type Control = HelloControl | RefusedControl;

/** Wall clock in microseconds, the envelope stamp unit. */
export function nowUs(): number {
  return Math.round((performance.timeOrigin + performance.now()) * 1000);
}

// JSON.stringify leaves non-ASCII verbatim; the host escapes it. Escape
// per UTF-16 code unit so astral characters become surrogate pairs, the
// same form the host emits.
function asciiQuote(s: string): string {
  const quoted = JSON.stringify(s);
  let out = "";
  for (let i = 0; i < quoted.length; i++) {
    const cu = quoted.charCodeAt(i);
    out += cu > 0x7e ? "\\u" + cu.toString(16).padStart(4, "0") : quoted[i];
  }
  return out;
}

/**
 * Deterministic compact JSON: keys sorted by code unit, ASCII only.
 * All protocol keys are ASCII, where code-unit and code-point order
 * agree. Throws WireFormatError on NaN or infinity.
 */
export function canonicalStringify(value: unknown): string {
  if (value === null) return "null";
  switch (typeof value) {
    case "boolean":
      return value ? "true" : "false";
    case "number":
      if (!Number.isFinite(value)) {
        throw new WireFormatError(`non-finite number ${value}`);
      }
      return JSON.stringify(value);
    case "string":
      return asciiQuote(value);
    case "object":
      break;
    default:
      throw new WireFormatError(`cannot encode a ${typeof value}`);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalStringify).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const parts = Object.keys(obj)
    .sort()
    .map((k) => asciiQuote(k) + ":" + canonicalStringify(obj[k]));
  return "{" + parts.join(",") + "}";
}

export async function registryHash(
  topics: Record<string, string> = TOPICS,
): Promise<string> {
  const data = new TextEncoder().encode(canonicalStringify(topics));
  const digest = await crypto.subtle.digest("SHA-256", data);
  return [...new Uint8Array(digest)].map((b) => b.toString(16).padStart(2, "0")).join("");
}

export function makeHello(registry: string): HelloControl {
  return { control: "hello", version: PROTOCOL_VERSION, registry };
}

function isPlainObject(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function checkInt(v: unknown, what: string): number {
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new WireFormatError(`${what} must be an integer, got ${JSON.stringify(v)}`);
  }
  return v;
}

const ENVELOPE_FIELDS = ["kind", "payload", "seq", "stamp_us", "topic"];

export function checkEnvelope(env: Envelope): Envelope {
  if (typeof env.topic !== "string" || env.topic === "") {
    throw new WireFormatError("topic must be a non-empty string");
  }
  if (checkInt(env.seq, "seq") < 0) {
    throw new WireFormatError(`seq must be non-negative, got ${env.seq}`);
  }
  checkInt(env.stamp_us, "stamp_us");
  if (!KINDS.has(env.kind)) {
    throw new WireFormatError(`unknown payload kind ${JSON.stringify(env.kind)}`);
  }
  if (!isPlainObject(env.payload)) {
    throw new WireFormatError("payload must be a JSON object");
  }
  return env;
}

export function encodeEnvelope(env: Envelope): string {
  checkEnvelope(env);
  return canonicalStringify({
    topic: env.topic,
    seq: env.seq,
    stamp_us: env.stamp_us,
    kind: env.kind,
    payload: env.payload,
  });
}

function parseObject(text: string): Record<string, unknown> {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (exc) {
    throw new WireFormatError(`not valid JSON: ${exc}`);
  }
  if (!isPlainObject(obj)) {
    throw new WireFormatError("expected a JSON object");
  }
  return obj;
}

export function decodeEnvelope(text: string): Envelope {
  const obj = parseObject(text);
  const got = Object.keys(obj).sort();
  if (got.length !== ENVELOPE_FIELDS.length || got.some((k, i) => k !== ENVELOPE_FIELDS[i])) {
    throw new WireFormatError(
      `envelope must carry exactly ${ENVELOPE_FIELDS.join(", ")}; got ${got.join(", ")}`,
    );
  }
  return checkEnvelope(obj as unknown as Envelope);
}

export function decodeControl(obj: Record<string, unknown>): Control {
  const control = obj.control;
  if (control === "hello") {
    for (const key of ["version", "registry"]) {
      if (typeof obj[key] !== "string") {
        throw new WireFormatError(`hello must carry a string ${key}`);
      }
    }
    return obj as unknown as HelloControl;
  }
  if (control === "refused") {
    if (typeof obj.reason !== "string") {
      throw new WireFormatError("refusal must carry a string reason");
    }
    return obj as unknown as RefusedControl;
  }
  throw new WireFormatError(`unknown control message ${JSON.stringify(control)}`);
}

/** One incoming text message: either a control object or an envelope. */
export function decodeLine(text: string): Envelope | Control {
  const obj = parseObject(text);
  if ("control" in obj) {
    return decodeControl(obj);
  }
  return decodeEnvelope(text);
}

// -- skeleton frame payloads ------------------------------------------------

export const SKELETON_JOINTS = [
  "head",
  "neck",
  "torso",
  "left_shoulder",
  "right_shoulder",
  "left_elbow",
  "right_elbow",
  "left_hand",
  "right_hand",
  "left_hip",
  "right_hip",
  "left_knee",
  "right_knee",
  "left_foot",
  "right_foot",
] as const;

export interface JointPayload {
  pos: [number, number, number];
  quat: [number, number, number, number];
  conf: number;
}

export interface SkeletonPayload {
  stamp_us: number;
  joints: Record<string, JointPayload>;
  [key: string]: unknown;
}

function checkNumberList(value: unknown, length: number, what: string): number[] {
  if (
    !Array.isArray(value) ||
    value.length !== length ||
    value.some((v) => typeof v !== "number" || !Number.isFinite(v))
  ) {
    throw new WireFormatError(`${what} must be a list of ${length} finite numbers`);
  }
  return value as number[];
}

/**
 * The frame contract the host enforces: exactly the 15 canonical
 * joints, finite positions, normalizable orientations, confidence in
 * [0, 1]. Every frame the console emits must pass this first.
 */
export function validateSkeletonPayload(payload: SkeletonPayload): void {
  checkInt(payload.stamp_us, "stamp_us");
  if (!isPlainObject(payload.joints)) {
    throw new WireFormatError("joints must be an object");
  }
  const names = new Set(Object.keys(payload.joints));
  const expected = new Set<string>(SKELETON_JOINTS);
  const missing = [...expected].filter((n) => !names.has(n)).sort();
  const extra = [...names].filter((n) => !expected.has(n)).sort();
  if (missing.length > 0 || extra.length > 0) {
    throw new WireFormatError(
      `frame must carry the 15 canonical joints; missing=${JSON.stringify(missing)} ` +
        `extra=${JSON.stringify(extra)}`,
    );
  }
  for (const name of SKELETON_JOINTS) {
    const joint = payload.joints[name];
    if (!isPlainObject(joint)) {
      throw new WireFormatError(`joint ${name} must be an object`);
    }
    checkNumberList(joint.pos, 3, `${name} pos`);
    const q = checkNumberList(joint.quat, 4, `${name} quat`);
    const norm = Math.hypot(q[0], q[1], q[2], q[3]);
    if (norm <= 1e-9) {
      throw new WireFormatError(`${name} quat norm ${norm} too small`);
    }
    const conf = joint.conf;
    if (typeof conf !== "number" || !(conf >= 0 && conf <= 1)) {
      throw new WireFormatError(`${name} conf must be in [0, 1], got ${conf}`);
    }
  }
}
