import { describe, expect, it } from "vitest";

import { LatencyTracker } from "../src/latency.js";
import {
  GaitBadge,
  LatestCell,
  STALE_AFTER_US,
  angleReadouts,
  formatAngle,
  formatHeading,
  stalenessBanner,
} from "../src/view.js";

describe("angle readouts", () => {
  it("formats a right-angle elbow as 1.571 rad", () => {
    expect(formatAngle(Math.PI / 2)).toBe("1.571 rad");
  });

  it("shows exactly the payload values, sorted by joint", () => {
    const payload = {
      right_elbow: Math.PI / 2,
      left_knee: -0.25,
      head_yaw: 0.0,
    };
    expect(angleReadouts(payload)).toEqual([
      ["head_yaw", "0.000 rad"],
      ["left_knee", "-0.250 rad"],
      ["right_elbow", "1.571 rad"],
    ]);
    // No re-derivation: the cell hands back the payload untouched.
    const cell = new LatestCell<typeof payload>();
    cell.set(payload, 0);
    expect(cell.get()).toBe(payload);
    expect(cell.get()!.right_elbow).toBe(Math.PI / 2);
  });

  it("formats headings in degrees", () => {
    expect(formatHeading(Math.PI / 2)).toBe("90.0°");
    expect(formatHeading(-0.26)).toBe("-14.9°");
  });
});

describe("gait badge", () => {
  it("tracks the forward step event sequence", () => {
    const badge = new GaitBadge();
    expect(badge.text).toBe("Initial");
    const sequence: Array<[{ event: string; leg?: string | null }, string]> = [
      [{ event: "lifted", leg: "right" }, "Right lifted"],
      [{ event: "placed", leg: "right" }, "Right placed"],
      [{ event: "step", leg: "right" }, "Right placed"],
      [{ event: "locomotion_started", leg: null }, "Locomoting"],
      [{ event: "motion_finished", leg: null }, "Locomoting"],
      [{ event: "locomotion_finished", leg: null }, "Standing"],
      [{ event: "reset" }, "Initial"],
    ];
    for (const [event, expected] of sequence) {
      badge.apply(event);
      expect(badge.text).toBe(expected);
    }
  });
});

describe("staleness", () => {
  it("stays quiet while data is fresh", () => {
    expect(stalenessBanner(0)).toBeNull();
    expect(stalenessBanner(STALE_AFTER_US)).toBeNull();
  });

  it("raises a banner after a second of silence", () => {
    expect(stalenessBanner(2_000_000)).toBe("no robot data for 2.0 s");
    expect(stalenessBanner(Infinity)).toBe("no robot data yet");
  });

  it("measures age from the latest sample", () => {
    const cell = new LatestCell<number>();
    expect(cell.ageUs(5)).toBe(Infinity);
    cell.set(7, 1_000_000);
    expect(cell.ageUs(1_400_000)).toBe(400_000);
    expect(stalenessBanner(cell.ageUs(3_500_000))).toBe("no robot data for 2.5 s");
  });
});

describe("latency tracker", () => {
  it("pairs frames with commands by payload stamp", () => {
    const tracker = new LatencyTracker();
    tracker.frameSent(10, 1000);
    tracker.frameSent(20, 2000);
    tracker.frameSent(30, 3000);
    tracker.commandsReceived(10, 1500);
    tracker.commandsReceived(20, 2100);
    tracker.commandsReceived(30, 3900);
    tracker.commandsReceived(99, 9999); // never sent, ignored
    expect(tracker.count).toBe(3);
    expect(tracker.p50Ms()).toBe(0.5);
    expect(tracker.p95Ms()).toBe(0.9);
  });

  it("keeps a bounded window", () => {
    const tracker = new LatencyTracker(4);
    for (let i = 0; i < 10; i++) {
      tracker.frameSent(i, i * 100);
      tracker.commandsReceived(i, i * 100 + (i + 1) * 10);
    }
    expect(tracker.count).toBe(4);
    // Only the last four samples (70..100 us) survive.
    expect(tracker.p50Ms()).toBe(0.08);
    expect(tracker.p95Ms()).toBe(0.1);
  });

  it("reports NaN before any pair lands", () => {
    expect(new LatencyTracker().p50Ms()).toBeNaN();
  });
});
