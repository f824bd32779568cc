/**
 * Wire vocabulary shared with the gateway: telemetry frames arrive as
 * single-line JSON over the event stream, command replies come back on
 * the POST. Everything off the wire is untrusted until it passes the
 * guards here; a line that fails simply yields null and is dropped.
 */

export type Phase = "FILL_A" | "FILL_B" | "DWELL" | "DISCHARGE" | "SAFE_HOLD";
export type Mode = "AUTO" | "MANUAL" | "HALTED";
export type GateCmd = "OPEN" | "CLOSED";

const PHASES: readonly string[] = ["FILL_A", "FILL_B", "DWELL", "DISCHARGE", "SAFE_HOLD"];
const MODES: readonly string[] = ["AUTO", "MANUAL", "HALTED"];
const GATE_CMDS: readonly string[] = ["OPEN", "CLOSED"];

/** Thermocouple channels read as degrees C, or "FAULT" for an open circuit. */
export type TempReading = number | "FAULT";

export interface Frame {
  type: "frame";
  seq: number;
  t_ms: number;
  clock: string;
  phase: Phase;
  mode: Mode;
  upper_cmd: GateCmd;
  lower_cmd: GateCmd;
  upper_pos: number;
  lower_pos: number;
  upper_closed_sw: boolean;
  lower_closed_sw: boolean;
  upper_temp_c: TempReading;
  lower_temp_c: TempReading;
  level_high: boolean;
  level_low: boolean;
  alarms: string[];
}

export interface Reply {
  type: "ack" | "nack";
  id: string | null;
  reason?: string;
}

/** Every command the server accepts, in display order. */
export const COMMAND_NAMES = [
  "acquire_token",
  "release_token",
  "start",
  "stop",
  "set_mode",
  "reset_alarms",
  "open_upper",
  "close_upper",
  "open_lower",
  "close_lower",
] as const;

export type CommandName = (typeof COMMAND_NAMES)[number];

/** Jog commands additionally require MANUAL mode on the controller side. */
export const JOG_COMMANDS: readonly CommandName[] = [
  "open_upper",
  "close_upper",
  "open_lower",
  "close_lower",
];

function finiteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function tempReading(v: unknown): v is TempReading {
  return v === "FAULT" || finiteNumber(v);
}

function stringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every((item) => typeof item === "string");
}

export function parseFrame(value: unknown): Frame | null {
  if (typeof value !== "object" || value === null) return null;
  const o = value as Record<string, unknown>;
  if (o.type !== "frame") return null;
  if (!finiteNumber(o.seq) || !Number.isInteger(o.seq) || o.seq < 1) return null;
  if (!finiteNumber(o.t_ms)) return null;
  if (typeof o.clock !== "string") return null;
  if (typeof o.phase !== "string" || !PHASES.includes(o.phase)) return null;
  if (typeof o.mode !== "string" || !MODES.includes(o.mode)) return null;
  if (typeof o.upper_cmd !== "string" || !GATE_CMDS.includes(o.upper_cmd)) return null;
  if (typeof o.lower_cmd !== "string" || !GATE_CMDS.includes(o.lower_cmd)) return null;
  if (!finiteNumber(o.upper_pos) || !finiteNumber(o.lower_pos)) return null;
  if (typeof o.upper_closed_sw !== "boolean") return null;
  if (typeof o.lower_closed_sw !== "boolean") return null;
  if (!tempReading(o.upper_temp_c) || !tempReading(o.lower_temp_c)) return null;
  if (typeof o.level_high !== "boolean" || typeof o.level_low !== "boolean") return null;
  if (!stringArray(o.alarms)) return null;
  return value as Frame;
}

export function parseReply(value: unknown): Reply | null {
  if (typeof value !== "object" || value === null) return null;
  const o = value as Record<string, unknown>;
  if (o.type !== "ack" && o.type !== "nack") return null;
  if (o.id !== null && typeof o.id !== "string") return null;
  if ("reason" in o && typeof o.reason !== "string") return null;
  return value as Reply;
}

/** Parse one line off the wire; unknown or damaged lines come back null. */
export function parseServerLine(text: string): Frame | Reply | null {
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch {
    return null;
  }
  return parseFrame(value) ?? parseReply(value);
}
