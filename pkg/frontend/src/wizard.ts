import type { Report } from "./protocol.js";

/**
 * Guided calibration: prompt the operator to look center/left/right/up/down
 * and then blink, collect gaze ratios (or EAR values for the blink step)
 * from the streamed reports, and suggest thresholds.
 *
 * Each directional threshold is the midpoint between the mean ratio of its
 * prompt and the mean of the center prompt; the EAR threshold is the
 * midpoint of the open-eye and closed-eye means observed while blinking.
 * Simplest defensible estimator; the operator can always override the
 * numbers before applying.
 */

export type PromptLabel = "CENTER" | "LEFT" | "RIGHT" | "UP" | "DOWN" | "BLINK";

export interface PromptPlan {
  label: PromptLabel;
  /** How many reports to consume for this prompt. */
  frames: number;
}

export const DEFAULT_PLAN: PromptPlan[] = [
  { label: "CENTER", frames: 60 },
  { label: "LEFT", frames: 60 },
  { label: "RIGHT", frames: 60 },
  { label: "UP", frames: 60 },
  { label: "DOWN", frames: 60 },
  { label: "BLINK", frames: 90 },
];

export interface PromptResult {
  label: PromptLabel;
  /** Reports consumed inside the prompt span. */
  seen: number;
  /** Samples that passed the usability filter. */
  usable: number;
  needsRetry: boolean;
  meanH?: number;
  meanV?: number;
  meanEarOpen?: number;
  meanEarClosed?: number;
}

export interface Suggestions {
  "gaze.h_left"?: number;
  "gaze.h_right"?: number;
  "gaze.v_up"?: number;
  "gaze.v_down"?: number;
  "blink.ear_threshold"?: number;
}

export interface WizardOutcome {
  prompts: PromptResult[];
  suggestions: Suggestions;
  /** Labels that collected too little and should be re-run. */
  retries: PromptLabel[];
}

export const midpoint = (a: number, b: number): number => (a + b) / 2;

const mean = (xs: number[]): number => xs.reduce((s, x) => s + x, 0) / xs.length;

interface Collected {
  plan: PromptPlan;
  seen: number;
  hs: number[];
  vs: number[];
  ears: number[];
}

export class CalibrationWizard {
  private collected: Collected[];
  private index = -1;

  constructor(
    plan: PromptPlan[] = DEFAULT_PLAN,
    private readonly minSamples: number = 5,
  ) {
    if (plan.length === 0) throw new RangeError("empty prompt plan");
    this.collected = plan.map((p) => ({ plan: p, seen: 0, hs: [], vs: [], ears: [] }));
  }

  start(): void {
    this.index = 0;
  }

  get running(): boolean {
    return this.index >= 0 && this.index < this.collected.length;
  }

  get currentPrompt(): PromptLabel | null {
    return this.running ? this.collected[this.index].plan.label : null;
  }

  /** 0..1 progress through the current prompt span. */
  get promptProgress(): number {
    if (!this.running) return 0;
    const c = this.collected[this.index];
    return c.plan.frames === 0 ? 1 : c.seen / c.plan.frames;
  }

  /**
   * Consume one streamed report. Gaze prompts keep (h, v) only from frames
   * with a pupil fix and a non-invalid direction; the blink prompt keeps
   * every EAR sample, closed-eye frames included (that is the point of it).
   */
  feed(report: Report): void {
    if (!this.running) return;
    const c = this.collected[this.index];
    c.seen += 1;
    if (c.plan.label === "BLINK") {
      if (report.ear !== null) c.ears.push(report.ear.mean);
    } else if (report.ratios !== null && report.direction !== "invalid") {
      c.hs.push(report.ratios.h);
      c.vs.push(report.ratios.v);
    }
    if (c.seen >= c.plan.frames) this.index += 1;
  }

  get finished(): boolean {
    return this.index >= this.collected.length;
  }

  finish(): WizardOutcome {
    const prompts = this.collected.map((c) => summarize(c, this.minSamples));
    const byLabel = new Map(prompts.map((p) => [p.label, p]));
    const suggestions: Suggestions = {};

    const center = byLabel.get("CENTER");
    const pair = (
      label: PromptLabel,
      pick: (p: PromptResult) => number | undefined,
      key: keyof Suggestions,
    ) => {
      const p = byLabel.get(label);
      if (!p || p.needsRetry || !center || center.needsRetry) return;
      const own = pick(p);
      const mid = pick(center);
      if (own !== undefined && mid !== undefined) suggestions[key] = midpoint(own, mid);
    };
    pair("LEFT", (p) => p.meanH, "gaze.h_left");
    pair("RIGHT", (p) => p.meanH, "gaze.h_right");
    pair("UP", (p) => p.meanV, "gaze.v_up");
    pair("DOWN", (p) => p.meanV, "gaze.v_down");

    const blink = byLabel.get("BLINK");
    if (blink && !blink.needsRetry && blink.meanEarOpen !== undefined && blink.meanEarClosed !== undefined) {
      suggestions["blink.ear_threshold"] = midpoint(blink.meanEarOpen, blink.meanEarClosed);
    }

    return {
      prompts,
      suggestions,
      retries: prompts.filter((p) => p.needsRetry).map((p) => p.label),
    };
  }
}

function summarize(c: Collected, minSamples: number): PromptResult {
  const label = c.plan.label;
  if (label === "BLINK") {
    // Split the EAR samples at the midrange of what was seen: blinking
    // produces two well-separated bands. If the spread is too small the
    // operator never closed their eyes, so no midpoint exists.
    const usable = c.ears.length;
    const base = { label, seen: c.seen, usable };
    if (usable < minSamples) return { ...base, needsRetry: true };
    const lo = Math.min(...c.ears);
    const hi = Math.max(...c.ears);
    if (hi - lo < 0.05) return { ...base, needsRetry: true };
    const split = midpoint(lo, hi);
    const closed = c.ears.filter((e) => e < split);
    const open = c.ears.filter((e) => e >= split);
    if (closed.length === 0 || open.length === 0) return { ...base, needsRetry: true };
    return {
      ...base,
      needsRetry: false,
      meanEarOpen: mean(open),
      meanEarClosed: mean(closed),
    };
  }
  const usable = c.hs.length;
  if (usable < minSamples) return { label, seen: c.seen, usable, needsRetry: true };
  return {
    label,
    seen: c.seen,
    usable,
    needsRetry: false,
    meanH: mean(c.hs),
    meanV: mean(c.vs),
  };
}
