import type { Report } from "./protocol.js";

/**
 * Bounded history of frame reports, ordered by frame index. A frame number
 * going backwards means the engine restarted; the buffer resets rather than
 * presenting two runs as one series.
 */
export class ReportRing {
  private buf: Report[] = [];

  constructor(readonly capacity: number = 600) {
    if (capacity < 1) throw new RangeError(`capacity must be >= 1, got ${capacity}`);
  }

  push(report: Report): void {
    const last = this.buf[this.buf.length - 1];
    if (last !== undefined && report.frame <= last.frame) {
      this.buf = [];
    }
    this.buf.push(report);
    if (this.buf.length > this.capacity) {
      this.buf.splice(0, this.buf.length - this.capacity);
    }
  }

  get size(): number {
    return this.buf.length;
  }

  get latest(): Report | undefined {
    return this.buf[this.buf.length - 1];
  }

  all(): readonly Report[] {
    return this.buf;
  }

  clear(): void {
    this.buf = [];
  }

  /** Mean EAR per frame; frames without landmarks are skipped. */
  earSeries(): Array<{ frame: number; mean: number }> {
    const out: Array<{ frame: number; mean: number }> = [];
    for (const r of this.buf) {
      if (r.ear !== null) out.push({ frame: r.frame, mean: r.ear.mean });
    }
    return out;
  }

  /** (h, v) per frame for frames where a pupil was found. */
  ratioSeries(): Array<{ frame: number; h: number; v: number }> {
    const out: Array<{ frame: number; h: number; v: number }> = [];
    for (const r of this.buf) {
      if (r.ratios !== null) out.push({ frame: r.frame, h: r.ratios.h, v: r.ratios.v });
    }
    return out;
  }
}
