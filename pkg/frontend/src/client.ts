/**
 * Gateway client: one event-stream subscription feeding the model, plus
 * fire-and-track command posts. The server ties the control token to
 * the stream's client id, so commands declare the same id.
 */

import { PanelModel } from "./model.js";
import { parseServerLine, type Reply } from "./protocol.js";
import { readSse } from "./sse.js";

export interface ClientOptions {
  clientId?: string;
  /** Pause between reconnect attempts. */
  retryMs?: number;
  now?: () => number;
  /** Fired after every state change; the render loop hangs off this. */
  onChange?: () => void;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class PanelClient {
  readonly model: PanelModel;
  readonly endpoint: string;
  readonly clientId: string;

  private readonly retryMs: number;
  private readonly now: () => number;
  private readonly onChange: () => void;
  private counter = 0;
  private stopped = false;
  private abort: AbortController | null = null;
  private streamTask: Promise<void> | null = null;

  constructor(endpoint: string, opts: ClientOptions = {}) {
    this.endpoint = endpoint.replace(/\/+$/, "");
    this.clientId = opts.clientId ?? `panel-${Math.random().toString(36).slice(2, 8)}`;
    this.retryMs = opts.retryMs ?? 1_000;
    this.now = opts.now ?? Date.now;
    this.onChange = opts.onChange ?? (() => {});
    this.model = new PanelModel(this.endpoint);
  }

  start(): void {
    if (this.streamTask !== null) return;
    this.streamTask = this.runStream();
  }

  async stop(): Promise<void> {
    this.stopped = true;
    this.abort?.abort();
    await this.streamTask;
  }

  /** Post one command; the model tracks it from pending to its outcome. */
  async send(name: string, arg?: string): Promise<Reply | null> {
    const id = `${this.clientId}-${++this.counter}`;
    this.model.commandSent(id, name, arg, this.now());
    this.onChange();
    const envelope: Record<string, unknown> = {
      type: "cmd",
      id,
      name,
      client: this.clientId,
    };
    if (arg !== undefined) envelope.arg = arg;
    try {
      const response = await fetch(`${this.endpoint}/cmd`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(envelope),
      });
      const reply = parseServerLine((await response.text()).trim());
      if (reply === null || (reply.type !== "ack" && reply.type !== "nack")) {
        throw new Error(`HTTP ${response.status}`);
      }
      this.model.commandReplied(id, reply);
      this.onChange();
      return reply;
    } catch (err) {
      const detail = err instanceof Error ? err.message : String(err);
      this.model.commandFailed(id, `send failed: ${detail}`);
      this.onChange();
      return null;
    }
  }

  /** Stale-command sweep; call it from the UI's timer. */
  tick(): void {
    if (this.model.tick(this.now())) this.onChange();
  }

  private async runStream(): Promise<void> {
    while (!this.stopped) {
      this.model.connecting();
      this.onChange();
      this.abort = new AbortController();
      try {
        await readSse(
          `${this.endpoint}/stream?client=${encodeURIComponent(this.clientId)}`,
          {
            onOpen: () => {
              this.model.live();
              this.onChange();
            },
            onEvent: (data) => this.onEvent(data),
          },
          this.abort.signal,
        );
      } catch {
        // Refused, dropped, or rejected; the retry loop below covers all.
      }
      if (this.stopped) break;
      this.model.offline();
      this.onChange();
      await sleep(this.retryMs);
    }
    this.model.offline();
    this.onChange();
  }

  private onEvent(data: string): void {
    const msg = parseServerLine(data);
    if (msg !== null && msg.type === "frame" && this.model.applyFrame(msg)) {
      this.onChange();
    }
  }
}
