/**
 * Panel state and the rules for changing it. Everything the renderer
 * shows lives here; the DOM layer is a pure function of this state, so
 * these transitions carry the whole behavioural contract:
 *
 *   - the displayed frame is always the highest-seq frame of the
 *     current stream (reconnects start a fresh stream, seq may restart)
 *   - a sent command is visibly pending until an ack, a nack, a
 *     transport failure, or the 5 s timeout marks it stale
 *   - the control token is believed held only while the server keeps
 *     saying so; losing the stream forfeits it
 */

import type { Frame, Reply } from "./protocol.js";

export type ConnectionStatus = "connecting" | "live" | "offline";

export type CommandStatus = "pending" | "ack" | "nack" | "failed" | "stale";

export interface CommandEntry {
  id: string;
  name: string;
  arg?: string;
  sentAt: number;
  status: CommandStatus;
  /** nack text verbatim from the wire, or a local transport error. */
  reason?: string;
}

export interface PanelState {
  endpoint: string;
  connection: ConnectionStatus;
  attempts: number;
  frame: Frame | null;
  lastSeq: number;
  tokenHeld: boolean;
  commands: CommandEntry[];
}

export const COMMAND_TIMEOUT_MS = 5_000;
const COMMAND_LOG_LIMIT = 30;

export class PanelModel {
  readonly state: PanelState;

  constructor(endpoint: string) {
    this.state = {
      endpoint,
      connection: "connecting",
      attempts: 0,
      frame: null,
      lastSeq: 0,
      tokenHeld: false,
      commands: [],
    };
  }

  connecting(): void {
    this.state.connection = "connecting";
    this.state.attempts += 1;
  }

  live(): void {
    this.state.connection = "live";
    // New stream, new seq numbering: a restarted server starts over at 1.
    this.state.lastSeq = 0;
  }

  offline(): void {
    this.state.connection = "offline";
    // The server frees the token when the stream drops.
    this.state.tokenHeld = false;
  }

  /** Returns false for frames that arrive late or duplicated. */
  applyFrame(frame: Frame): boolean {
    if (frame.seq <= this.state.lastSeq) return false;
    this.state.frame = frame;
    this.state.lastSeq = frame.seq;
    return true;
  }

  commandSent(id: string, name: string, arg: string | undefined, now: number): void {
    this.state.commands.push({ id, name, arg, sentAt: now, status: "pending" });
    if (this.state.commands.length > COMMAND_LOG_LIMIT) {
      this.state.commands.splice(0, this.state.commands.length - COMMAND_LOG_LIMIT);
    }
  }

  commandReplied(id: string, reply: Reply): void {
    const entry = this.state.commands.find((c) => c.id === id);
    if (entry === undefined) return;
    if (entry.status === "pending" || entry.status === "stale") {
      entry.status = reply.type === "ack" ? "ack" : "nack";
      entry.reason = reply.reason;
    }
    if (reply.type === "ack") {
      if (entry.name === "acquire_token") this.state.tokenHeld = true;
      if (entry.name === "release_token") this.state.tokenHeld = false;
    } else if (reply.reason === "not control holder") {
      // The server knows better than our bookkeeping.
      this.state.tokenHeld = false;
    }
  }

  /** The POST itself failed; the command never reached the controller. */
  commandFailed(id: string, reason: string): void {
    const entry = this.state.commands.find((c) => c.id === id);
    if (entry === undefined || entry.status !== "pending") return;
    entry.status = "failed";
    entry.reason = reason;
  }

  /** Sweep pending commands past the reply deadline; true if any turned stale. */
  tick(now: number): boolean {
    let changed = false;
    for (const entry of this.state.commands) {
      if (entry.status === "pending" && now - entry.sentAt >= COMMAND_TIMEOUT_MS) {
        entry.status = "stale";
        changed = true;
      }
    }
    return changed;
  }
}

export interface Banner {
  level: "critical" | "alarm" | "fault" | "offline";
  text: string;
}

/**
 * Banners in display order, most severe first. The both-open check is
 * deliberate paranoia: the controller never commands it, but if a frame
 * ever said so the panel must shout rather than draw it as routine.
 */
export function banners(state: PanelState): Banner[] {
  const out: Banner[] = [];
  const frame = state.frame;
  if (frame !== null) {
    if (frame.upper_cmd === "OPEN" && frame.lower_cmd === "OPEN") {
      out.push({
        level: "critical",
        text: "BOTH GATES COMMANDED OPEN: invalid telemetry or interlock failure",
      });
    }
    if (frame.alarms.length > 0) {
      out.push({ level: "alarm", text: `Alarms active: ${frame.alarms.join(", ")}` });
    }
    const faulted: string[] = [];
    if (frame.upper_temp_c === "FAULT") faulted.push("upper");
    if (frame.lower_temp_c === "FAULT") faulted.push("lower");
    if (faulted.length > 0) {
      out.push({ level: "fault", text: `Thermocouple fault: ${faulted.join(", ")}` });
    }
  }
  if (state.connection === "offline") {
    out.push({
      level: "offline",
      text: `Connection lost, retrying (attempt ${state.attempts})`,
    });
  } else if (state.connection === "connecting") {
    out.push({ level: "offline", text: `Connecting to ${state.endpoint}` });
  }
  return out;
}

/** Mutating commands need the token and a live stream to matter. */
export function canCommand(state: PanelState): boolean {
  return state.connection === "live" && state.tokenHeld;
}

/** Gate jogs additionally require the controller to be in MANUAL. */
export function canJog(state: PanelState): boolean {
  return canCommand(state) && state.frame !== null && state.frame.mode === "MANUAL";
}

/** Newest command entry among the given names, for per-control status. */
export function lastResult(
  state: PanelState,
  names: readonly string[],
): CommandEntry | undefined {
  for (let i = state.commands.length - 1; i >= 0; i--) {
    const entry = state.commands[i];
    if (entry !== undefined && names.includes(entry.name)) return entry;
  }
  return undefined;
}
