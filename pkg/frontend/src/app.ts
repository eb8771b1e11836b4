/**
 * Single-page operator console.
 *
 * One WebSocket to the pipeline bridge, one publish timer for puppet
 * frames, one render loop. Incoming traffic lands in latest-value
 * cells so rendering never blocks the socket and never queues stale
 * frames. Reconnecting is always an explicit user action.
 */

import {
  PROTOCOL_VERSION,
  canonicalStringify,
  decodeLine,
  encodeEnvelope,
  makeHello,
  nowUs,
  registryHash,
  validateSkeletonPayload,
  type Envelope,
} from "./protocol.js";
import {
  BEND_RANGE,
  TILT_RANGE,
  YAW_RANGE,
  defaultState,
  puppetFrame,
  puppetPositions,
  type PuppetState,
  type Vec,
} from "./puppet.js";
import { LatencyTracker } from "./latency.js";
import {
  GaitBadge,
  LatestCell,
  angleReadouts,
  formatHeading,
  stalenessBanner,
} from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const addressInput = el<HTMLInputElement>("address");
const connectButton = el<HTMLButtonElement>("connect");
const statusLine = el<HTMLSpanElement>("status");
const fpsInput = el<HTMLInputElement>("fps");
const frontCanvas = el<HTMLCanvasElement>("puppet-front");
const sideCanvas = el<HTMLCanvasElement>("puppet-side");
const robotCanvas = el<HTMLCanvasElement>("robot-figure");
const compassCanvas = el<HTMLCanvasElement>("compass");
const badgeEl = el<HTMLSpanElement>("gait-badge");
const headingEl = el<HTMLSpanElement>("heading-text");
const latencyEl = el<HTMLSpanElement>("latency-text");
const bannerEl = el<HTMLDivElement>("stale-banner");
const robotPanel = el<HTMLDivElement>("robot-panel");
const readoutsEl = el<HTMLTableSectionElement>("readouts");
const eventsEl = el<HTMLUListElement>("events");

interface RobotStatePayload {
  stamp_us: number;
  angles: Record<string, number>;
  heading: number;
  position: [number, number];
}

interface GaitEventPayload {
  stamp_us: number;
  event: string;
  leg: string | null;
  motion: string | null;
  [key: string]: unknown;
}

const state: PuppetState = defaultState();
const robotCell = new LatestCell<RobotStatePayload>();
const badge = new GaitBadge();
const latency = new LatencyTracker();
const eventLog: string[] = [];

let socket: WebSocket | null = null;
let established = false;
let seq = 0;
let publishTimer: ReturnType<typeof setInterval> | null = null;

function setStatus(text: string, kind: "ok" | "bad" | "plain" = "plain"): void {
  statusLine.textContent = text;
  statusLine.className = kind;
}

function stopPublishing(): void {
  if (publishTimer !== null) {
    clearInterval(publishTimer);
    publishTimer = null;
  }
}

function startPublishing(): void {
  stopPublishing();
  const fps = Math.min(60, Math.max(1, Number(fpsInput.value) || 20));
  publishTimer = setInterval(() => {
    if (socket === null || socket.readyState !== WebSocket.OPEN || !established) return;
    const stamp = nowUs();
    const frame = puppetFrame(state, stamp);
    // Contract gate: an invalid frame must never reach the wire.
    validateSkeletonPayload(frame);
    const envelope: Envelope = {
      topic: "skeleton",
      seq: seq++,
      stamp_us: stamp,
      kind: "skeleton_frame",
      payload: frame,
    };
    socket.send(encodeEnvelope(envelope));
    latency.frameSent(frame.stamp_us, stamp);
  }, 1000 / fps);
}

function handleEnvelope(env: Envelope): void {
  if (env.kind === "robot_state") {
    robotCell.set(env.payload as unknown as RobotStatePayload, nowUs());
  } else if (env.kind === "gait_event") {
    const ev = env.payload as unknown as GaitEventPayload;
    badge.apply(ev);
    const detail = [ev.leg, ev.motion].filter((v) => typeof v === "string").join(" ");
    eventLog.unshift(`${(ev.stamp_us / 1e6).toFixed(2)}s  ${ev.event}  ${detail}`.trimEnd());
    if (eventLog.length > 12) eventLog.pop();
  } else if (env.kind === "joint_commands") {
    const stamp = (env.payload as { stamp_us?: unknown }).stamp_us;
    if (typeof stamp === "number") {
      latency.commandsReceived(stamp, env.stamp_us);
    }
  }
}

async function connect(): Promise<void> {
  socket?.close();
  established = false;
  stopPublishing();
  const address = addressInput.value.trim();
  setStatus(`connecting to ${address}`);
  const hash = await registryHash();
  let ws: WebSocket;
  try {
    ws = new WebSocket(address);
  } catch (exc) {
    setStatus(`connection failed: ${exc}; fix the address and Connect again`, "bad");
    return;
  }
  socket = ws;
  ws.onopen = () => {
    ws.send(canonicalStringify(makeHello(hash)));
  };
  ws.onmessage = (event) => {
    let message;
    try {
      message = decodeLine(String(event.data));
    } catch (exc) {
      setStatus(`protocol error: ${exc}`, "bad");
      ws.close();
      return;
    }
    if ("control" in message) {
      if (message.control === "refused") {
        // The reason carries the server's version text on a mismatch.
        setStatus(`refused: ${message.reason}`, "bad");
        established = false;
        ws.close();
      } else if (message.version !== PROTOCOL_VERSION) {
        setStatus(
          `refused: version mismatch: want ${PROTOCOL_VERSION}, got '${message.version}'`,
          "bad",
        );
        established = false;
        ws.close();
      } else {
        established = true;
        setStatus(`connected, protocol ${message.version}`, "ok");
        startPublishing();
      }
      return;
    }
    handleEnvelope(message);
  };
  ws.onerror = () => {
    if (!established) {
      setStatus(`connection to ${address} failed; check the pipeline and Connect again`, "bad");
    }
  };
  ws.onclose = () => {
    stopPublishing();
    if (established) {
      setStatus("disconnected; press Connect to retry", "bad");
      established = false;
    }
  };
}

connectButton.addEventListener("click", () => {
  void connect();
});
fpsInput.addEventListener("change", () => {
  if (established) startPublishing();
});

// -- puppet controls ---------------------------------------------------------

const sliderIds = [
  ["bend-left", "left", "bend", BEND_RANGE],
  ["bend-right", "right", "bend", BEND_RANGE],
  ["tilt-left", "left", "tilt", TILT_RANGE],
  ["tilt-right", "right", "tilt", TILT_RANGE],
] as const;

for (const [id, side, field, range] of sliderIds) {
  const slider = el<HTMLInputElement>(id);
  slider.min = String(range[0]);
  slider.max = String(range[1]);
  slider.step = "0.01";
  slider.value = "0";
  slider.addEventListener("input", () => {
    state.legs[side][field] = Number(slider.value);
  });
}

const yawDial = el<HTMLInputElement>("yaw");
yawDial.min = String(YAW_RANGE[0]);
yawDial.max = String(YAW_RANGE[1]);
yawDial.step = "0.01";
yawDial.value = "0";
yawDial.addEventListener("input", () => {
  state.torsoYaw = Number(yawDial.value);
});

interface Projection {
  canvas: HTMLCanvasElement;
  /** World point to canvas pixels. */
  toPx(p: Vec): [number, number];
  /** Canvas pixels back into the world, keeping the hidden coordinate. */
  fromPx(x: number, y: number, keep: Vec): Vec;
  label: string;
}

const SCALE = 150; // px per meter
const GROUND = 20; // px margin under the feet

function frontProjection(canvas: HTMLCanvasElement): Projection {
  const cx = canvas.width / 2;
  const cy = canvas.height - GROUND;
  return {
    canvas,
    label: "front (x / y)",
    toPx: (p) => [cx + p[0] * SCALE, cy - p[1] * SCALE],
    fromPx: (x, y, keep) => [(x - cx) / SCALE, (cy - y) / SCALE, keep[2]],
  };
}

function sideProjection(canvas: HTMLCanvasElement): Projection {
  const cx = canvas.width / 2;
  const cy = canvas.height - GROUND;
  // Depth axis centered on the standing plane at z = 2.
  return {
    canvas,
    label: "side (z / y)",
    toPx: (p) => [cx + (p[2] - 2.0) * SCALE, cy - p[1] * SCALE],
    fromPx: (x, y, keep) => [keep[0], (cy - y) / SCALE, 2.0 + (x - cx) / SCALE],
  };
}

const projections = [frontProjection(frontCanvas), sideProjection(sideCanvas)];

const BONES: Array<[string, string]> = [
  ["head", "neck"],
  ["neck", "torso"],
  ["neck", "left_shoulder"],
  ["neck", "right_shoulder"],
  ["left_shoulder", "left_elbow"],
  ["left_elbow", "left_hand"],
  ["right_shoulder", "right_elbow"],
  ["right_elbow", "right_hand"],
  ["torso", "left_hip"],
  ["torso", "right_hip"],
  ["left_hip", "right_hip"],
  ["left_hip", "left_knee"],
  ["left_knee", "left_foot"],
  ["right_hip", "right_knee"],
  ["right_knee", "right_foot"],
];

const DRAGGABLE = [
  "left_shoulder",
  "left_elbow",
  "left_hand",
  "right_shoulder",
  "right_elbow",
  "right_hand",
] as const;
type DraggableJoint = (typeof DRAGGABLE)[number];

let drag: { joint: DraggableJoint; projection: Projection } | null = null;

function armPoint(joint: DraggableJoint): Vec {
  const [side, part] = joint.split("_") as ["left" | "right", "shoulder" | "elbow" | "hand"];
  return state.arms[side][part];
}

function setArmPoint(joint: DraggableJoint, p: Vec): void {
  const [side, part] = joint.split("_") as ["left" | "right", "shoulder" | "elbow" | "hand"];
  state.arms[side][part] = p;
}

function pointerPos(canvas: HTMLCanvasElement, event: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

for (const projection of projections) {
  const canvas = projection.canvas;
  canvas.addEventListener("pointerdown", (event) => {
    const [px, py] = pointerPos(canvas, event);
    const positions = puppetPositions(state);
    let best: DraggableJoint | null = null;
    let bestDist = 14; // px hit radius
    for (const joint of DRAGGABLE) {
      const [jx, jy] = projection.toPx(positions[joint]);
      const d = Math.hypot(jx - px, jy - py);
      if (d < bestDist) {
        best = joint;
        bestDist = d;
      }
    }
    if (best !== null) {
      drag = { joint: best, projection };
      canvas.setPointerCapture(event.pointerId);
    }
  });
  canvas.addEventListener("pointermove", (event) => {
    if (drag === null || drag.projection !== projection) return;
    const [px, py] = pointerPos(canvas, event);
    setArmPoint(drag.joint, projection.fromPx(px, py, armPoint(drag.joint)));
  });
  const release = (event: PointerEvent) => {
    if (drag !== null && drag.projection === projection) {
      drag = null;
      canvas.releasePointerCapture(event.pointerId);
    }
  };
  canvas.addEventListener("pointerup", release);
  canvas.addEventListener("pointercancel", release);
}

// -- rendering ---------------------------------------------------------------

function drawPuppet(projection: Projection): void {
  const ctx = projection.canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = projection.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#4a4a4a";
  ctx.lineWidth = 1;
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  ctx.fillStyle = "#777";
  ctx.font = "11px sans-serif";
  ctx.fillText(projection.label, 8, 14);

  const positions = puppetPositions(state);
  ctx.strokeStyle = "#2f6f4f";
  ctx.lineWidth = 2;
  for (const [a, b] of BONES) {
    const [ax, ay] = projection.toPx(positions[a]);
    const [bx, by] = projection.toPx(positions[b]);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }
  for (const joint of DRAGGABLE) {
    const [x, y] = projection.toPx(positions[joint]);
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fillStyle = drag?.joint === joint ? "#d06020" : "#2f6f4f";
    ctx.fill();
  }
  const [hx, hy] = projection.toPx(positions.head);
  ctx.beginPath();
  ctx.arc(hx, hy, 9, 0, 2 * Math.PI);
  ctx.stroke();
}

function segment(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  angle: number,
  length: number,
): [number, number] {
  const nx = x + length * Math.sin(angle);
  const ny = y + length * Math.cos(angle);
  ctx.beginPath();
  ctx.moveTo(x, y);
  ctx.lineTo(nx, ny);
  ctx.stroke();
  return [nx, ny];
}

/**
 * Schematic robot: front half drawn from roll angles, side half from
 * pitch and fold angles. Angles are used exactly as received.
 */
function drawRobot(angles: Record<string, number>): void {
  const ctx = robotCanvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = robotCanvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#35507a";
  ctx.lineWidth = 2;
  ctx.fillStyle = "#777";
  ctx.font = "11px sans-serif";

  const a = (name: string): number => angles[name] ?? 0;
  const halves: Array<{ cx: number; label: string; front: boolean }> = [
    { cx: width * 0.25, label: "front", front: true },
    { cx: width * 0.75, label: "side", front: false },
  ];
  for (const half of halves) {
    const hipY = height * 0.55;
    const neckY = hipY - 70;
    ctx.fillText(half.label, half.cx - 12, 14);
    ctx.beginPath();
    ctx.moveTo(half.cx, neckY);
    ctx.lineTo(half.cx, hipY);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(half.cx, neckY - 12, 8, 0, 2 * Math.PI);
    ctx.stroke();

    for (const side of ["left", "right"] as const) {
      const sign = side === "left" ? -1 : 1;
      const shoulderX = half.cx + (half.front ? sign * 16 : 0);
      const hipX = half.cx + (half.front ? sign * 9 : 0);
      let armAngle: number;
      let forearmAngle: number;
      let thighAngle: number;
      let shinAngle: number;
      if (half.front) {
        armAngle = sign * a(`${side}_shoulder_roll`);
        forearmAngle = armAngle + sign * 0.3 * a(`${side}_elbow`);
        thighAngle = sign * a(`${side}_hip_roll`);
        shinAngle = thighAngle;
      } else {
        armAngle = -a(`${side}_shoulder_pitch`);
        forearmAngle = armAngle - a(`${side}_elbow`);
        thighAngle = -a(`${side}_hip_pitch`);
        shinAngle = thighAngle + a(`${side}_knee`);
      }
      ctx.globalAlpha = side === "left" ? 0.65 : 1.0;
      let [x, y] = segment(ctx, shoulderX, neckY + 4, armAngle, 26);
      segment(ctx, x, y, forearmAngle, 24);
      [x, y] = segment(ctx, hipX, hipY, thighAngle, 32);
      [x, y] = segment(ctx, x, y, shinAngle, 30);
      if (!half.front) {
        segment(ctx, x, y, Math.PI / 2 + a(`${side}_ankle_pitch`), 10);
      }
      ctx.globalAlpha = 1.0;
    }
  }
}

function drawCompass(heading: number | null): void {
  const ctx = compassCanvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = compassCanvas;
  const cx = width / 2;
  const cy = height / 2;
  const r = Math.min(cx, cy) - 4;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#4a4a4a";
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.fillStyle = "#777";
  ctx.font = "10px sans-serif";
  ctx.fillText("0", cx - 3, cy - r + 11);
  if (heading === null) return;
  // Positive heading turns left; the needle swings counterclockwise.
  const angle = -heading;
  ctx.strokeStyle = "#b03030";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + (r - 6) * Math.sin(angle), cy - (r - 6) * Math.cos(angle));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function renderRobotPanel(): void {
  const robot = robotCell.get();
  const age = robotCell.ageUs(nowUs());
  const banner = stalenessBanner(age);
  bannerEl.textContent = banner ?? "";
  bannerEl.style.display = banner === null ? "none" : "block";
  robotPanel.classList.toggle("stale", banner !== null);

  badgeEl.textContent = badge.text;
  if (robot !== undefined) {
    drawRobot(robot.angles);
    drawCompass(robot.heading);
    headingEl.textContent = formatHeading(robot.heading);
    readoutsEl.replaceChildren(
      ...angleReadouts(robot.angles).map(([name, text]) => {
        const row = document.createElement("tr");
        const left = document.createElement("td");
        left.textContent = name;
        const right = document.createElement("td");
        right.textContent = text;
        row.append(left, right);
        return row;
      }),
    );
  } else {
    drawRobot({});
    drawCompass(null);
    headingEl.textContent = "?";
  }

  const p50 = latency.p50Ms();
  latencyEl.textContent = Number.isNaN(p50)
    ? "collecting"
    : `p50 ${p50.toFixed(1)} ms, p95 ${latency.p95Ms().toFixed(1)} ms (${latency.count})`;

  eventsEl.replaceChildren(
    ...eventLog.map((line) => {
      const item = document.createElement("li");
      item.textContent = line;
      return item;
    }),
  );
}

function renderLoop(): void {
  for (const projection of projections) drawPuppet(projection);
  renderRobotPanel();
  requestAnimationFrame(renderLoop);
}

setStatus("not connected; press Connect");
requestAnimationFrame(renderLoop);
