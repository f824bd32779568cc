/**
 * Entry point. Configuration is the endpoint URL, nothing more: served
 * from the gateway itself the panel talks to its own origin, and
 * ?endpoint=http://host:port points it elsewhere.
 */

import { PanelClient } from "./client.js";
import { render } from "./render.js";

const params = new URLSearchParams(location.search);
const endpoint = params.get("endpoint") ?? location.origin;

const app = document.getElementById("app");
if (app === null) throw new Error("missing #app mount point");

let queued = false;
function schedule(): void {
  // Coalesce bursts; one paint per animation frame keeps the render
  // loop single and the newest state always wins.
  if (queued) return;
  queued = true;
  requestAnimationFrame(() => {
    queued = false;
    app!.innerHTML = render(client.model.state);
  });
}

const client = new PanelClient(endpoint, { onChange: schedule });

app.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement | null;
  const btn = target?.closest("button[data-cmd]");
  if (!(btn instanceof HTMLButtonElement) || btn.disabled) return;
  const cmd = btn.dataset.cmd;
  if (cmd === undefined) return;
  void client.send(cmd, btn.dataset.arg);
});

setInterval(() => client.tick(), 250);
client.start();
schedule();
