/**
 * Wire types for the engine's WebSocket telemetry protocol, transcribed from
 * the protocol documentation. This file deliberately shares no code with the
 * engine; if the JSON shapes drift, the parser here rejects the frame and
 * the UI shows a diagnostic instead of crashing.
 */

export interface EarView {
  left: number;
  right: number;
  mean: number;
}

export interface PupilView {
  x: number;
  y: number;
  area: number;
  method: string;
}

export interface EventView {
  frame: number;
  kind: string;
  dx?: number;
  dy?: number;
}

export interface Report {
  type: "report";
  frame: number;
  direction: string;
  ear: EarView | null;
  pupil: { left: PupilView | null; right: PupilView | null };
  ratios: { h: number; v: number } | null;
  events: EventView[];
  processing_micros: number;
  diagnostics: string[];
  thumbnail?: string;
  dropped?: number;
}

export interface ConfigReply {
  type: "config";
  values: Record<string, unknown>;
}

export interface AckReply {
  type: "ack";
  key: string | null;
  detail: string;
}

export interface ErrReply {
  type: "err";
  key: string | null;
  detail: string;
}

export type Inbound = Report | ConfigReply | AckReply | ErrReply;

export type ControlMessage =
  | { type: "set"; key: string; value: unknown }
  | { type: "get" }
  | { type: "snapshot"; on: boolean };

function isObject(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

/** Decode one inbound frame; null for anything that is not a known shape. */
export function parseInbound(raw: string): Inbound | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isObject(obj)) return null;
  switch (obj.type) {
    case "report":
      if (typeof obj.frame !== "number" || typeof obj.direction !== "string") return null;
      return obj as unknown as Report;
    case "config":
      if (!isObject(obj.values)) return null;
      return obj as unknown as ConfigReply;
    case "ack":
    case "err":
      if (typeof obj.detail !== "string") return null;
      return obj as unknown as AckReply | ErrReply;
    default:
      return null;
  }
}
