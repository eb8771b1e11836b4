/**
 * The drag puppet: a synthetic skeleton the operator poses instead of
 * standing in front of a sensor.
 *
 * Arms are posed by dragging shoulder, elbow and hand positions in two
 * viewport projections. Legs are posed with two sliders each: knee bend
 * (the fold angle at the knee) and stance depth (thigh tilt toward the
 * sensor, which moves the knee deeper and decides step direction). The
 * torso heading comes from a yaw dial. Everything not puppeted holds
 * the fixed standing pose.
 *
 * Coordinates follow the sensor convention: +x operator's right, +y up,
 * +z away from the sensor. Leg synthesis uses the same closed-form
 * two-segment chain as the host's synthetic scenarios, so slider
 * motions reproduce the exact knee geometry the gait detector expects.
 */

import { SKELETON_JOINTS, type SkeletonPayload, type JointPayload } from "./protocol.js";

export type Vec = [number, number, number];
export type Quat = [number, number, number, number];

const THIGH_M = 0.45;
const SHIN_M = 0.45;

/** Fixed standing pose, meters, facing the sensor at z = 2. */
export const STANDING: Readonly<Record<string, Vec>> = {
  head: [0.0, 1.65, 2.0],
  neck: [0.0, 1.5, 2.0],
  torso: [0.0, 1.2, 2.0],
  right_shoulder: [0.2, 1.45, 2.0],
  left_shoulder: [-0.2, 1.45, 2.0],
  right_elbow: [0.25, 1.15, 2.0],
  left_elbow: [-0.25, 1.15, 2.0],
  right_hand: [0.25, 0.85, 2.0],
  left_hand: [-0.25, 0.85, 2.0],
  right_hip: [0.12, 0.95, 2.0],
  left_hip: [-0.12, 0.95, 2.0],
  right_knee: [0.12, 0.5, 2.0],
  left_knee: [-0.12, 0.5, 2.0],
  right_foot: [0.12, 0.05, 2.0],
  left_foot: [-0.12, 0.05, 2.0],
};

export interface ArmPose {
  shoulder: Vec;
  elbow: Vec;
  hand: Vec;
}

export interface LegPose {
  /** Knee fold angle, radians; 0 is a straight leg. */
  bend: number;
  /** Thigh tilt toward the sensor, radians; positive moves the knee deeper. */
  tilt: number;
}

export interface PuppetState {
  arms: { left: ArmPose; right: ArmPose };
  legs: { left: LegPose; right: LegPose };
  torsoYaw: number;
}

export const BEND_RANGE: readonly [number, number] = [0.0, 2.2];
export const TILT_RANGE: readonly [number, number] = [-0.9, 0.9];
export const YAW_RANGE: readonly [number, number] = [-Math.PI, Math.PI];
// Drag clamp box; keeps wild pointer math from producing silly frames.
const REACH_M = 10.0;

function vec(name: string): Vec {
  const v = STANDING[name];
  return [v[0], v[1], v[2]];
}

export function defaultState(): PuppetState {
  return {
    arms: {
      left: { shoulder: vec("left_shoulder"), elbow: vec("left_elbow"), hand: vec("left_hand") },
      right: {
        shoulder: vec("right_shoulder"),
        elbow: vec("right_elbow"),
        hand: vec("right_hand"),
      },
    },
    legs: {
      left: { bend: 0.0, tilt: 0.0 },
      right: { bend: 0.0, tilt: 0.0 },
    },
    torsoYaw: 0.0,
  };
}

/**
 * Two-segment leg chain under the hip. The knee hangs one thigh length
 * below the hip, tilted toward the sensor by `tilt`; the shin continues
 * at tilt - bend, so the angle folded at the knee is exactly `bend`.
 */
export function legPositions(hip: Vec, tilt: number, bend: number): { knee: Vec; foot: Vec } {
  const knee: Vec = [hip[0], hip[1] - THIGH_M * Math.cos(tilt), hip[2] - THIGH_M * Math.sin(tilt)];
  const shin = tilt - bend;
  const foot: Vec = [knee[0], knee[1] - SHIN_M * Math.cos(shin), knee[2] - SHIN_M * Math.sin(shin)];
  return { knee, foot };
}

/** Rotation by `yaw` about the vertical axis, as (w, x, y, z). */
export function yawQuaternion(yaw: number): Quat {
  const half = yaw / 2.0;
  return [Math.cos(half), 0.0, Math.sin(half), 0.0];
}

function clampTo(value: number, lo: number, hi: number, fallback: number): number {
  if (!Number.isFinite(value)) return fallback;
  return Math.min(hi, Math.max(lo, value));
}

function clampPoint(p: Vec, fallback: Vec): Vec {
  return [
    clampTo(p[0], -REACH_M, REACH_M, fallback[0]),
    clampTo(p[1], -REACH_M, REACH_M, fallback[1]),
    clampTo(p[2], -REACH_M, REACH_M, fallback[2]),
  ];
}

/**
 * Clamp every control into its legal range. Non-finite values snap
 * back to the standing default, so no pointer or slider input can make
 * the puppet emit an invalid frame.
 */
export function normalizeState(state: PuppetState): PuppetState {
  const arm = (side: "left" | "right"): ArmPose => ({
    shoulder: clampPoint(state.arms[side].shoulder, vec(`${side}_shoulder`)),
    elbow: clampPoint(state.arms[side].elbow, vec(`${side}_elbow`)),
    hand: clampPoint(state.arms[side].hand, vec(`${side}_hand`)),
  });
  const leg = (side: "left" | "right"): LegPose => ({
    bend: clampTo(state.legs[side].bend, BEND_RANGE[0], BEND_RANGE[1], 0.0),
    tilt: clampTo(state.legs[side].tilt, TILT_RANGE[0], TILT_RANGE[1], 0.0),
  });
  return {
    arms: { left: arm("left"), right: arm("right") },
    legs: { left: leg("left"), right: leg("right") },
    torsoYaw: clampTo(state.torsoYaw, YAW_RANGE[0], YAW_RANGE[1], 0.0),
  };
}

const IDENTITY: Quat = [1.0, 0.0, 0.0, 0.0];

/** All 15 joint positions for a state, normalized first. */
export function puppetPositions(state: PuppetState): Record<string, Vec> {
  const s = normalizeState(state);
  const positions: Record<string, Vec> = {};
  for (const name of SKELETON_JOINTS) {
    positions[name] = vec(name);
  }
  for (const side of ["left", "right"] as const) {
    positions[`${side}_shoulder`] = s.arms[side].shoulder;
    positions[`${side}_elbow`] = s.arms[side].elbow;
    positions[`${side}_hand`] = s.arms[side].hand;
    const { knee, foot } = legPositions(positions[`${side}_hip`], s.legs[side].tilt, s.legs[side].bend);
    positions[`${side}_knee`] = knee;
    positions[`${side}_foot`] = foot;
  }
  return positions;
}

/**
 * One full skeleton frame payload. Always carries the 15 canonical
 * joints at confidence 1.0; the torso orientation encodes the yaw dial
 * and every other joint is identity.
 */
export function puppetFrame(state: PuppetState, stampUs: number): SkeletonPayload {
  const s = normalizeState(state);
  const positions = puppetPositions(s);
  const joints: Record<string, JointPayload> = {};
  const torsoQuat = yawQuaternion(s.torsoYaw);
  for (const name of SKELETON_JOINTS) {
    joints[name] = {
      pos: positions[name],
      quat: name === "torso" ? torsoQuat : ([...IDENTITY] as Quat),
      conf: 1.0,
    };
  }
  return { stamp_us: Math.round(stampUs), joints };
}
