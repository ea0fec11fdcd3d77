import type { ReportRing } from "./ring.js";

/** Streaming strip chart of the mean eye aspect ratio with the threshold drawn in. */
export class EarChart {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly maxEar: number = 0.6,
  ) {}

  draw(ring: ReportRing, threshold: number | null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, w, h);

    const yFor = (ear: number): number => h - (Math.min(ear, this.maxEar) / this.maxEar) * h;

    if (threshold !== null) {
      ctx.strokeStyle = "#b3542f";
      ctx.setLineDash([4, 3]);
      ctx.beginPath();
      ctx.moveTo(0, yFor(threshold));
      ctx.lineTo(w, yFor(threshold));
      ctx.stroke();
      ctx.setLineDash([]);
    }

    const series = ring.earSeries();
    if (series.length < 2) return;
    const span = ring.capacity;
    const first = series[series.length - 1].frame - span + 1;
    ctx.strokeStyle = "#4da3ff";
    ctx.beginPath();
    let started = false;
    for (const { frame, mean } of series) {
      const x = ((frame - first) / span) * w;
      if (x < 0) continue;
      const y = yFor(mean);
      if (started) ctx.lineTo(x, y);
      else ctx.moveTo(x, y);
      started = true;
    }
    ctx.stroke();
  }
}

export interface Bands {
  hLeft: number;
  hRight: number;
  vUp: number;
  vDown: number;
}

/** The unit square of gaze ratios: threshold bands plus the latest (h, v). */
export class CrosshairChart {
  constructor(private readonly canvas: HTMLCanvasElement) {}

  draw(ratios: { h: number; v: number } | null, bands: Bands | null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, w, h);
    ctx.strokeStyle = "#333a44";
    ctx.strokeRect(0.5, 0.5, w - 1, h - 1);

    if (bands !== null) {
      ctx.strokeStyle = "#5a636f";
      ctx.setLineDash([4, 3]);
      for (const x of [bands.hLeft * w, bands.hRight * w]) {
        ctx.beginPath();
        ctx.moveTo(x, 0);
        ctx.lineTo(x, h);
        ctx.stroke();
      }
      for (const y of [bands.vUp * h, bands.vDown * h]) {
        ctx.beginPath();
        ctx.moveTo(0, y);
        ctx.lineTo(w, y);
        ctx.stroke();
      }
      ctx.setLineDash([]);
    }

    if (ratios !== null) {
      const x = ratios.h * w;
      const y = ratios.v * h;
      ctx.strokeStyle = "#4da3ff";
      ctx.beginPath();
      ctx.moveTo(x - 8, y);
      ctx.lineTo(x + 8, y);
      ctx.moveTo(x, y - 8);
      ctx.lineTo(x, y + 8);
      ctx.stroke();
      ctx.fillStyle = "#4da3ff";
      ctx.beginPath();
      ctx.arc(x, y, 3, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}
