/**
 * State to HTML, nothing else. The whole panel is re-rendered as one
 * string; there is no retained DOM state to drift out of sync with the
 * model. Buttons carry data-cmd/data-arg so the entry point can wire a
 * single delegated click handler.
 */

import {
  banners,
  canCommand,
  canJog,
  lastResult,
  type CommandEntry,
  type PanelState,
} from "./model.js";
import { JOG_COMMANDS, type Frame, type TempReading } from "./protocol.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function temp(value: TempReading): string {
  return value === "FAULT" ? "FAULT" : `${value.toFixed(1)} &#176;C`;
}

function tempClass(value: TempReading): string {
  return value === "FAULT" ? "temp temp-fault" : "temp";
}

function mimicSvg(frame: Frame): string {
  // Positions run 0 (closed) to 1 (open); plates shrink as they retract.
  const upperW = Math.max(0, 140 * (1 - frame.upper_pos)).toFixed(1);
  const lowerW = Math.max(0, 44 * (1 - frame.lower_pos)).toFixed(1);
  const fillPct = frame.level_high ? 0.9 : frame.level_low ? 0.1 : 0.5;
  const fillH = (124 * fillPct).toFixed(1);
  const fillY = (188 - 124 * fillPct).toFixed(1);
  const upperFlow = frame.upper_pos > 0.9 ? '<rect class="flow" x="176" y="28" width="8" height="24"/>' : "";
  const lowerFlow = frame.lower_pos > 0.9 ? '<rect class="flow" x="176" y="258" width="8" height="26"/>' : "";
  const led = (on: boolean) => (on ? "led led-on" : "led led-off");
  return `<svg class="mimic-svg" viewBox="0 0 340 300" role="img" aria-label="machine mimic">
  <text class="lbl" x="10" y="40">feed</text>
  ${upperFlow}
  <line class="rail" x1="100" y1="56" x2="260" y2="56"/>
  <rect class="gate" x="110" y="50" width="${upperW}" height="12" rx="2"/>
  <text class="lbl" x="262" y="46">upper ${frame.upper_cmd}</text>
  <circle class="${led(frame.upper_closed_sw)}" cx="268" cy="56" r="5"/>
  <text class="lbl-sm" x="278" y="60">closed sw</text>
  <path class="vessel" d="M110 62 L110 190 L160 235 L160 245 M250 62 L250 190 L200 235 L200 245"/>
  <rect class="material" x="114" y="${fillY}" width="132" height="${fillH}"/>
  <circle class="${led(frame.level_high)}" cx="268" cy="96" r="5"/>
  <text class="lbl-sm" x="278" y="100">level high</text>
  <circle class="${led(frame.level_low)}" cx="268" cy="176" r="5"/>
  <text class="lbl-sm" x="278" y="180">level low</text>
  <text class="${tempClass(frame.upper_temp_c)}" x="10" y="100">U ${temp(frame.upper_temp_c)}</text>
  <text class="${tempClass(frame.lower_temp_c)}" x="10" y="180">L ${temp(frame.lower_temp_c)}</text>
  <line class="rail" x1="150" y1="252" x2="210" y2="252"/>
  <rect class="gate" x="158" y="246" width="${lowerW}" height="12" rx="2"/>
  <text class="lbl" x="214" y="268">lower ${frame.lower_cmd}</text>
  <circle class="${led(frame.lower_closed_sw)}" cx="268" cy="252" r="5"/>
  <text class="lbl-sm" x="278" y="256">closed sw</text>
  ${lowerFlow}
  <text class="lbl" x="10" y="290">discharge</text>
</svg>`;
}

function chipRow(frame: Frame | null): string {
  if (frame === null) {
    return '<div class="chips"><span class="chip">waiting for telemetry</span></div>';
  }
  return `<div class="chips">
  <span class="chip phase phase-${escapeHtml(frame.phase)}">${escapeHtml(frame.phase)}</span>
  <span class="chip mode mode-${escapeHtml(frame.mode)}">${escapeHtml(frame.mode)}</span>
  <span class="chip">t = ${frame.t_ms} ms</span>
  <span class="chip">frame ${frame.seq}</span>
</div>`;
}

const STATUS_TEXT: Record<CommandEntry["status"], string> = {
  pending: "pending",
  ack: "ack",
  nack: "nack",
  failed: "failed",
  stale: "no reply (5 s)",
};

function resultLine(entry: CommandEntry | undefined): string {
  if (entry === undefined) return "";
  const name = entry.arg === undefined ? entry.name : `${entry.name} ${entry.arg}`;
  const reason = entry.reason === undefined ? "" : ` <span class="cmd-reason">${escapeHtml(entry.reason)}</span>`;
  const retry =
    entry.status === "stale" || entry.status === "failed"
      ? ` <button class="retry" data-cmd="${escapeHtml(entry.name)}"${
          entry.arg === undefined ? "" : ` data-arg="${escapeHtml(entry.arg)}"`
        }>retry</button>`
      : "";
  return `<div class="result"><span class="cmd-name">${escapeHtml(name)}</span> <span class="cmd-status st-${entry.status}">${STATUS_TEXT[entry.status]}</span>${reason}${retry}</div>`;
}

function button(label: string, cmd: string, enabled: boolean, arg?: string): string {
  const argAttr = arg === undefined ? "" : ` data-arg="${escapeHtml(arg)}"`;
  return `<button data-cmd="${escapeHtml(cmd)}"${argAttr}${enabled ? "" : " disabled"}>${escapeHtml(label)}</button>`;
}

function controls(state: PanelState): string {
  const live = state.connection === "live";
  const run = canCommand(state);
  const jog = canJog(state);
  return `<section class="card controls">
<div class="group">
  <h2>Control token</h2>
  <p class="hint">Viewers are read-only; commands need the token.</p>
  <span class="token-state ${state.tokenHeld ? "token-held" : "token-free"}">${state.tokenHeld ? "held" : "not held"}</span>
  ${button("acquire", "acquire_token", live && !state.tokenHeld)}
  ${button("release", "release_token", live && state.tokenHeld)}
  ${resultLine(lastResult(state, ["acquire_token", "release_token"]))}
</div>
<div class="group">
  <h2>Sequence</h2>
  ${button("start", "start", run)}
  ${button("stop", "stop", run)}
  ${button("reset alarms", "reset_alarms", run)}
  <span class="sep"></span>
  ${button("AUTO", "set_mode", run, "AUTO")}
  ${button("MANUAL", "set_mode", run, "MANUAL")}
  ${button("HALTED", "set_mode", run, "HALTED")}
  ${resultLine(lastResult(state, ["start", "stop", "reset_alarms", "set_mode"]))}
</div>
<div class="group">
  <h2>Gate jog</h2>
  <p class="hint">Needs MANUAL mode and the token.</p>
  ${button("open upper", "open_upper", jog)}
  ${button("close upper", "close_upper", jog)}
  ${button("open lower", "open_lower", jog)}
  ${button("close lower", "close_lower", jog)}
  ${resultLine(lastResult(state, JOG_COMMANDS))}
</div>
</section>`;
}

function tray(state: PanelState): string {
  const rows = state.commands
    .slice(-8)
    .reverse()
    .map((entry) => {
      const name = entry.arg === undefined ? entry.name : `${entry.name} ${entry.arg}`;
      const reason = entry.reason === undefined ? "" : escapeHtml(entry.reason);
      return `<tr><td>${escapeHtml(name)}</td><td><span class="cmd-status st-${entry.status}">${STATUS_TEXT[entry.status]}</span></td><td>${reason}</td></tr>`;
    })
    .join("\n");
  if (rows === "") return "";
  return `<section class="card tray">
<h2>Recent commands</h2>
<table><thead><tr><th>command</th><th>state</th><th>detail</th></tr></thead>
<tbody>${rows}</tbody></table>
</section>`;
}

export function render(state: PanelState): string {
  const bannerHtml = banners(state)
    .map((b) => `<div class="banner banner-${b.level}">${escapeHtml(b.text)}</div>`)
    .join("\n");
  const mimic = state.frame === null ? "" : mimicSvg(state.frame);
  return `<header class="top">
<h1>Cyclone operator panel</h1>
<span class="conn conn-${state.connection}">${state.connection}</span>
<span class="endpoint">${escapeHtml(state.endpoint)}</span>
</header>
<section class="banners">${bannerHtml}</section>
<main class="cols">
<section class="card mimic">
${chipRow(state.frame)}
${mimic}
</section>
${controls(state)}
</main>
${tray(state)}`;
}
