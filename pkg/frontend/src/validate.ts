/**
 * Client-side mirror of the engine's config invariants, so the UI refuses a
 * bad `set` before it is ever sent. The engine remains the authority; an
 * `err` reply is still handled if the lists ever drift apart.
 */

type Rule = (value: number) => string | null;

const int =
  (min: number, check?: Rule): Rule =>
  (v) => {
    if (!Number.isInteger(v)) return "must be an integer";
    if (v < min) return `must be >= ${min}`;
    return check ? check(v) : null;
  };

const positive: Rule = (v) => (v > 0 ? null : "must be > 0");

const unit: Rule = (v) => (v >= 0 && v <= 1 ? null : "must lie in [0, 1]");

const NUMERIC_RULES: Record<string, Rule> = {
  "blink.ear_threshold": positive,
  "blink.min_frames": int(1),
  "blink.max_click_frames": int(1),
  "pupil.bilateral_diameter": int(1, (v) => (v % 2 === 1 ? null : "must be odd")),
  "pupil.bilateral_sigma_color": positive,
  "pupil.bilateral_sigma_space": positive,
  "pupil.erode_radius": int(1),
  "pupil.erode_iterations": int(1),
  "pupil.threshold": int(0, (v) => (v <= 255 ? null : "must lie in [0, 255]")),
  "pupil.min_area_frac": (v) => (v > 0 && v <= 1 ? null : "must lie in (0, 1]"),
  "pupil.max_area_frac": (v) => (v > 0 && v <= 1 ? null : "must lie in (0, 1]"),
  "hough.r_min": int(1),
  "hough.r_max": int(1),
  "hough.gradient_threshold": (v) => (v >= 0 ? null : "must be >= 0"),
  "hough.accumulator_min_votes": int(1),
  "gaze.h_left": unit,
  "gaze.h_right": unit,
  "gaze.v_up": unit,
  "gaze.v_down": unit,
  "events.dwell_frames": int(1),
  "events.move_step": int(0),
  "events.click_refractory_frames": int(0),
  "events.hold_frames": int(0),
  "engine.eye_margin": int(0),
};

// Pairs that must stay strictly or weakly ordered across fields; checked
// against the currently displayed values for the partner key.
const ORDERINGS: Array<{ low: string; high: string; strict: boolean }> = [
  { low: "blink.min_frames", high: "blink.max_click_frames", strict: false },
  { low: "pupil.min_area_frac", high: "pupil.max_area_frac", strict: true },
  { low: "hough.r_min", high: "hough.r_max", strict: false },
  { low: "gaze.h_left", high: "gaze.h_right", strict: true },
  { low: "gaze.v_up", high: "gaze.v_down", strict: true },
];

/**
 * Check a proposed value for one dotted key. `current` supplies the other
 * keys' values for cross-field rules. Returns an error message, or null when
 * the value would be accepted.
 */
export function prevalidate(
  key: string,
  value: unknown,
  current: Record<string, unknown>,
): string | null {
  if (key === "engine.detector") {
    return value === "threshold" || value === "hough"
      ? null
      : "must be 'threshold' or 'hough'";
  }
  if (key === "engine.smoothing_enabled") {
    return typeof value === "boolean" ? null : "must be true or false";
  }
  if (key === "engine.telemetry_port") {
    if (value === null) return null;
    if (typeof value === "number" && Number.isInteger(value) && value >= 1 && value <= 65535)
      return null;
    return "must be none or a port in 1..65535";
  }

  const rule = NUMERIC_RULES[key];
  if (rule === undefined) return `unknown key '${key}'`;
  if (typeof value !== "number" || Number.isNaN(value)) return "must be a number";
  const own = rule(value);
  if (own !== null) return own;

  for (const { low, high, strict } of ORDERINGS) {
    if (key !== low && key !== high) continue;
    const other = current[key === low ? high : low];
    if (typeof other !== "number") continue;
    const lo = key === low ? value : other;
    const hi = key === high ? value : other;
    if (strict ? lo >= hi : lo > hi) {
      return `needs ${low} ${strict ? "<" : "<="} ${high}`;
    }
  }
  return null;
}

/** All keys the panel may edit, in display order. */
export function editableKeys(): string[] {
  return [
    ...Object.keys(NUMERIC_RULES),
    "engine.detector",
    "engine.smoothing_enabled",
    "engine.telemetry_port",
  ];
}
