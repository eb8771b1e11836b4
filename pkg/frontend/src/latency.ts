/**
 * Rolling frame-to-command latency.
 *
 * The pipeline stamps every command batch with the stream stamp of the
 * skeleton frame that produced it, so matching payload stamps pair a
 * sent frame with its commands. Latency is the difference of envelope
 * wall stamps; both ends share a clock when the console talks to a
 * local pipeline.
 */

const PENDING_CAP = 2048;

export class LatencyTracker {
  private readonly window: number;
  private pending = new Map<number, number>();
  private samplesUs: number[] = [];

  constructor(window = 240) {
    this.window = window;
  }

  /** A skeleton frame left the console: payload stamp, envelope stamp. */
  frameSent(payloadStampUs: number, wallUs: number): void {
    this.pending.set(payloadStampUs, wallUs);
    // Frames muted by a stepping robot never produce commands; drop the
    // oldest pending entries instead of growing forever.
    while (this.pending.size > PENDING_CAP) {
      const oldest = this.pending.keys().next().value as number;
      this.pending.delete(oldest);
    }
  }

  /** A command batch arrived: payload stamp, envelope stamp. */
  commandsReceived(payloadStampUs: number, wallUs: number): void {
    const sentAt = this.pending.get(payloadStampUs);
    if (sentAt === undefined) return;
    this.pending.delete(payloadStampUs);
    this.samplesUs.push(wallUs - sentAt);
    if (this.samplesUs.length > this.window) {
      this.samplesUs.splice(0, this.samplesUs.length - this.window);
    }
  }

  get count(): number {
    return this.samplesUs.length;
  }

  /** Nearest-rank percentile of the rolling window, in milliseconds. */
  percentileMs(p: number): number {
    const n = this.samplesUs.length;
    if (n === 0) return NaN;
    const sorted = [...this.samplesUs].sort((a, b) => a - b);
    const idx = Math.min(n - 1, Math.max(0, Math.ceil((p / 100) * n) - 1));
    return sorted[idx] / 1000;
  }

  p50Ms(): number {
    return this.percentileMs(50);
  }

  p95Ms(): number {
    return this.percentileMs(95);
  }
}
