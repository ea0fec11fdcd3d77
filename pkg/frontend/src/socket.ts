import { parseInbound, type ControlMessage, type Inbound } from "./protocol.js";

export type SocketStatus = "connecting" | "open" | "closed";

export interface SocketHandlers {
  onMessage: (msg: Inbound) => void;
  onStatus: (status: SocketStatus, attempt: number) => void;
}

const RETRY_BASE_MS = 1000;
const RETRY_MAX_MS = 10000;

/**
 * One WebSocket to the engine with automatic reconnection. Retry backs off
 * 1s, 2s, 4s ... capped at 10s, and resets once a connection opens.
 */
export class EngineSocket {
  private ws: WebSocket | null = null;
  private attempt = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private url: string,
    private readonly handlers: SocketHandlers,
  ) {}

  connect(url?: string): void {
    if (url !== undefined) this.url = url;
    this.stopped = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.ws !== null) {
      this.ws.onclose = null;
      this.ws.close();
    }
    this.open();
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    if (this.ws !== null) {
      this.ws.onclose = null;
      this.ws.close();
      this.ws = null;
    }
    this.handlers.onStatus("closed", this.attempt);
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(msg: ControlMessage): boolean {
    if (!this.connected) return false;
    this.ws!.send(JSON.stringify(msg));
    return true;
  }

  setValue(key: string, value: unknown): boolean {
    return this.send({ type: "set", key, value });
  }

  requestConfig(): boolean {
    return this.send({ type: "get" });
  }

  setSnapshot(on: boolean): boolean {
    return this.send({ type: "snapshot", on });
  }

  private open(): void {
    this.handlers.onStatus("connecting", this.attempt);
    let ws: WebSocket;
    try {
      ws = new WebSocket(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.handlers.onStatus("open", 0);
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseInbound(ev.data);
      if (msg !== null) this.handlers.onMessage(msg);
    };
    ws.onclose = () => {
      this.ws = null;
      if (!this.stopped) this.scheduleRetry();
    };
    ws.onerror = () => {
      // onclose follows; nothing to do here.
    };
  }

  private scheduleRetry(): void {
    this.handlers.onStatus("closed", this.attempt);
    const delay = Math.min(RETRY_BASE_MS * 2 ** this.attempt, RETRY_MAX_MS);
    this.attempt += 1;
    this.timer = setTimeout(() => this.open(), delay);
  }
}
