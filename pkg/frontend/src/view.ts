/**
 * View-model pieces for the robot panel, kept free of the DOM.
 *
 * Readouts display exactly the numbers the wire delivered; the console
 * never re-derives angles or state on its side, it only formats.
 */

export function formatAngle(rad: number): string {
  return `${rad.toFixed(3)} rad`;
}

export function formatHeading(rad: number): string {
  return `${((rad * 180) / Math.PI).toFixed(1)}°`;
}

/** Sorted (joint, formatted angle) rows straight from a payload. */
export function angleReadouts(angles: Record<string, number>): Array<[string, string]> {
  return Object.keys(angles)
    .sort()
    .map((name) => [name, formatAngle(angles[name])]);
}

function capitalize(s: string): string {
  return s.length === 0 ? s : s[0].toUpperCase() + s.slice(1);
}

/**
 * Gait badge fed by gait events. Starts at "Initial", tracks leg
 * lift/place states, shows "Locomoting" while a motion plays and
 * returns to "Standing" when the bout finishes.
 */
export class GaitBadge {
  text = "Initial";

  apply(event: { event: string; leg?: string | null }): void {
    const leg = typeof event.leg === "string" ? capitalize(event.leg) : "";
    switch (event.event) {
      case "lifted":
        this.text = `${leg} lifted`.trim();
        break;
      case "placed":
        this.text = `${leg} placed`.trim();
        break;
      case "locomotion_started":
        this.text = "Locomoting";
        break;
      case "locomotion_finished":
        this.text = "Standing";
        break;
      case "reset":
        this.text = "Initial";
        break;
      // step, turn and motion_finished refine the log, not the badge
    }
  }
}

/** Latest value per topic; the render loop reads, the socket writes. */
export class LatestCell<T> {
  private value: T | undefined;
  private atUs = -Infinity;

  set(value: T, atUs: number): void {
    this.value = value;
    this.atUs = atUs;
  }

  get(): T | undefined {
    return this.value;
  }

  ageUs(nowUs: number): number {
    return this.value === undefined ? Infinity : nowUs - this.atUs;
  }
}

export const STALE_AFTER_US = 1_000_000;

/** Banner text when robot data stops flowing, else null. */
export function stalenessBanner(ageUs: number): string | null {
  if (ageUs <= STALE_AFTER_US) return null;
  if (!Number.isFinite(ageUs)) return "no robot data yet";
  return `no robot data for ${(ageUs / 1e6).toFixed(1)} s`;
}
