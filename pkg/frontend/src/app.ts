import { EarChart, CrosshairChart, type Bands } from "./charts.js";
import { formatConfigFile } from "./configfile.js";
import { decodePgmBase64, drawPgm } from "./pgm.js";
import type { EventView, Inbound, Report } from "./protocol.js";
import { ReportRing } from "./ring.js";
import { EngineSocket, type SocketStatus } from "./socket.js";
import { prevalidate } from "./validate.js";
import { CalibrationWizard, DEFAULT_PLAN, type WizardOutcome } from "./wizard.js";

const EVENT_LOG_LIMIT = 200;

function el<T extends HTMLElement>(root: ParentNode, id: string): T {
  const found = root.querySelector<T>(`#${id}`);
  if (!found) throw new Error(`missing element #${id}`);
  return found;
}

/** Wires the page together: socket, ring buffer, charts, config panel, wizard. */
export class App {
  private readonly ring = new ReportRing(600);
  private readonly socket: EngineSocket;
  private earChart: EarChart;
  private crosshair: CrosshairChart;
  private configValues: Record<string, unknown> = {};
  private wizard: CalibrationWizard | null = null;
  private wizardOutcome: WizardOutcome | null = null;
  private snapshotOn = false;
  private eventCount = 0;

  private readonly banner: HTMLElement;
  private readonly badge: HTMLElement;
  private readonly eventLog: HTMLElement;
  private readonly configPanel: HTMLElement;
  private readonly wizardBox: HTMLElement;
  private readonly thumb: HTMLCanvasElement;
  private readonly stats: HTMLElement;

  constructor(private readonly doc: Document) {
    this.banner = el(doc, "banner");
    this.badge = el(doc, "direction-badge");
    this.eventLog = el(doc, "event-log");
    this.configPanel = el(doc, "config-panel");
    this.wizardBox = el(doc, "wizard");
    this.thumb = el<HTMLCanvasElement>(doc, "thumbnail");
    this.stats = el(doc, "stats");
    this.earChart = new EarChart(el<HTMLCanvasElement>(doc, "ear-chart"));
    this.crosshair = new CrosshairChart(el<HTMLCanvasElement>(doc, "crosshair"));

    const urlInput = el<HTMLInputElement>(doc, "engine-url");
    this.socket = new EngineSocket(urlInput.value, {
      onMessage: (msg) => this.onMessage(msg),
      onStatus: (status, attempt) => this.onStatus(status, attempt),
    });
    el<HTMLButtonElement>(doc, "connect-btn").addEventListener("click", () => {
      this.socket.connect(urlInput.value);
    });
    el<HTMLButtonElement>(doc, "snapshot-btn").addEventListener("click", () => {
      this.socket.setSnapshot(!this.snapshotOn);
      this.snapshotOn = !this.snapshotOn;
    });
    el<HTMLButtonElement>(doc, "export-btn").addEventListener("click", () => this.exportConfig());
    el<HTMLButtonElement>(doc, "wizard-btn").addEventListener("click", () => this.startWizard());
  }

  start(): void {
    this.socket.connect();
  }

  /** Tear the connection down and stop retrying (page unload, tests). */
  stop(): void {
    this.socket.close();
  }

  private onStatus(status: SocketStatus, attempt: number): void {
    this.banner.dataset.status = status;
    if (status === "open") {
      this.banner.textContent = "connected";
      this.socket.requestConfig();
    } else if (status === "connecting") {
      this.banner.textContent = attempt > 0 ? `reconnecting (attempt ${attempt + 1})` : "connecting";
    } else {
      this.banner.textContent = "disconnected, retrying";
    }
  }

  private onMessage(msg: Inbound): void {
    switch (msg.type) {
      case "report":
        this.onReport(msg);
        break;
      case "config":
        this.configValues = { ...msg.values };
        this.renderConfigPanel();
        break;
      case "ack":
        if (msg.key !== null && msg.key in this.configValues) {
          // Reflect the accepted value; a fresh get keeps numbers exact.
          this.socket.requestConfig();
        }
        this.note(`ack ${msg.key ?? ""}: ${msg.detail}`);
        break;
      case "err":
        this.note(`engine rejected ${msg.key ?? "request"}: ${msg.detail}`);
        break;
    }
  }

  private onReport(report: Report): void {
    this.ring.push(report);
    if (this.wizard !== null && this.wizard.running) {
      this.wizard.feed(report);
      this.renderWizard();
      if (this.wizard.finished) {
        this.wizardOutcome = this.wizard.finish();
        this.wizard = null;
        this.renderWizardOutcome();
      }
    }

    this.badge.textContent = report.direction.toUpperCase();
    this.badge.dataset.direction = report.direction;
    for (const ev of report.events) this.logEvent(ev);
    if (report.dropped !== undefined && report.dropped > 0) {
      this.note(`engine dropped ${report.dropped} report(s) for this client`);
    }

    const earThreshold = asNumber(this.configValues["blink.ear_threshold"]);
    this.earChart.draw(this.ring, earThreshold);
    this.crosshair.draw(report.ratios, this.bands());
    if (report.thumbnail !== undefined) {
      try {
        drawPgm(this.thumb, decodePgmBase64(report.thumbnail));
      } catch {
        // a malformed thumbnail is not worth breaking the stream over
      }
    }
    this.stats.textContent =
      `frame ${report.frame} | ${report.processing_micros} us` +
      (report.ear ? ` | EAR ${report.ear.mean.toFixed(3)}` : "") +
      (report.diagnostics.length > 0 ? ` | ${report.diagnostics.join("; ")}` : "");
  }

  private bands(): Bands | null {
    const hLeft = asNumber(this.configValues["gaze.h_left"]);
    const hRight = asNumber(this.configValues["gaze.h_right"]);
    const vUp = asNumber(this.configValues["gaze.v_up"]);
    const vDown = asNumber(this.configValues["gaze.v_down"]);
    if (hLeft === null || hRight === null || vUp === null || vDown === null) return null;
    return { hLeft, hRight, vUp, vDown };
  }

  private logEvent(ev: EventView): void {
    const line = this.doc.createElement("div");
    line.className = "event-line";
    line.textContent =
      ev.kind === "move_by"
        ? `${ev.frame}  move_by  dx=${ev.dx} dy=${ev.dy}`
        : `${ev.frame}  ${ev.kind}`;
    this.eventLog.appendChild(line);
    this.eventCount += 1;
    while (this.eventLog.childElementCount > EVENT_LOG_LIMIT) {
      this.eventLog.firstElementChild?.remove();
    }
    this.eventLog.scrollTop = this.eventLog.scrollHeight;
  }

  private note(text: string): void {
    const line = this.doc.createElement("div");
    line.className = "note-line";
    line.textContent = text;
    this.eventLog.appendChild(line);
    this.eventLog.scrollTop = this.eventLog.scrollHeight;
  }

  private renderConfigPanel(): void {
    this.configPanel.replaceChildren();
    for (const [key, value] of Object.entries(this.configValues)) {
      const row = this.doc.createElement("div");
      row.className = "config-row";
      const label = this.doc.createElement("label");
      label.textContent = key;
      const input = this.doc.createElement("input");
      input.value = value === null ? "none" : String(value);
      input.addEventListener("change", () => this.applyEdit(key, input));
      row.append(label, input);
      this.configPanel.appendChild(row);
    }
  }

  private applyEdit(key: string, input: HTMLInputElement): void {
    const value = parseEdited(input.value);
    const problem = prevalidate(key, value, this.configValues);
    if (problem !== null) {
      this.note(`${key}: ${problem}`);
      input.value = this.configValues[key] === null ? "none" : String(this.configValues[key]);
      return;
    }
    this.socket.setValue(key, value);
  }

  private startWizard(): void {
    this.wizard = new CalibrationWizard(DEFAULT_PLAN);
    this.wizard.start();
    this.wizardOutcome = null;
    this.renderWizard();
  }

  private renderWizard(): void {
    if (this.wizard === null || !this.wizard.running) return;
    const pct = Math.round(this.wizard.promptProgress * 100);
    this.wizardBox.textContent = `Look ${this.wizard.currentPrompt} (${pct}%)`;
  }

  private renderWizardOutcome(): void {
    const outcome = this.wizardOutcome;
    if (outcome === null) return;
    this.wizardBox.replaceChildren();
    const summary = this.doc.createElement("div");
    if (outcome.retries.length > 0) {
      summary.textContent = `retry needed: ${outcome.retries.join(", ")} (too few usable samples)`;
    } else {
      summary.textContent = "calibration complete";
    }
    this.wizardBox.appendChild(summary);

    const entries = Object.entries(outcome.suggestions);
    for (const [key, value] of entries) {
      const line = this.doc.createElement("div");
      line.textContent = `${key} = ${value.toFixed(4)}`;
      this.wizardBox.appendChild(line);
    }
    if (entries.length > 0) {
      const apply = this.doc.createElement("button");
      apply.textContent = "apply suggestions";
      apply.addEventListener("click", () => {
        for (const [key, value] of entries) {
          if (prevalidate(key, value, this.configValues) === null) {
            this.socket.setValue(key, value);
          }
        }
      });
      this.wizardBox.appendChild(apply);
    }
  }

  private exportConfig(): void {
    const merged = { ...this.configValues };
    if (this.wizardOutcome !== null) {
      for (const [key, value] of Object.entries(this.wizardOutcome.suggestions)) {
        merged[key] = value;
      }
    }
    const blob = new Blob([formatConfigFile(merged)], { type: "text/plain" });
    const a = this.doc.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "engine.cfg";
    a.click();
    URL.revokeObjectURL(a.href);
  }
}

function asNumber(x: unknown): number | null {
  return typeof x === "number" ? x : null;
}

/** Interpret a config text field: none/true/false/numbers, else the raw string. */
export function parseEdited(text: string): unknown {
  const t = text.trim();
  if (t === "none" || t === "null") return null;
  if (t === "true") return true;
  if (t === "false") return false;
  if (t !== "" && !Number.isNaN(Number(t))) return Number(t);
  return t;
}
