/**
 * text/event-stream reader built on fetch. Node 20 has no EventSource,
 * and the browser one gives no abort or open signal worth having, so
 * one small parser serves the panel and its tests alike.
 */

/**
 * Incremental SSE framing: feed it decoded chunks, it fires onEvent with
 * each complete event's data payload. Handles events split anywhere,
 * CRLF line endings, comment keepalives, and multi-line data fields.
 */
export function sseFeed(onEvent: (data: string) => void): (chunk: string) => void {
  let buf = "";
  let data: string[] = [];
  const dispatch = () => {
    if (data.length > 0) onEvent(data.join("\n"));
    data = [];
  };
  return (chunk: string) => {
    buf += chunk;
    for (;;) {
      const nl = buf.indexOf("\n");
      if (nl < 0) break;
      let line = buf.slice(0, nl);
      buf = buf.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        dispatch();
        continue;
      }
      if (line.startsWith(":")) continue; // comment / keepalive
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "data") data.push(value);
      // event/id/retry fields are not part of this wire protocol
    }
  };
}

export interface SseHandlers {
  /** Called once the server has accepted the stream. */
  onOpen?: () => void;
  onEvent: (data: string) => void;
}

/**
 * One connection attempt. Resolves when the server ends the stream,
 * throws on network trouble or a non-200 answer; aborting the signal
 * resolves quietly.
 */
export async function readSse(
  url: string,
  handlers: SseHandlers,
  signal: AbortSignal,
): Promise<void> {
  const response = await fetch(url, {
    signal,
    headers: { accept: "text/event-stream" },
  });
  if (!response.ok || response.body === null) {
    throw new Error(`stream rejected: HTTP ${response.status}`);
  }
  handlers.onOpen?.();
  const feed = sseFeed(handlers.onEvent);
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      feed(decoder.decode(value, { stream: true }));
    }
    feed(decoder.decode());
  } catch (err) {
    if (signal.aborted) return;
    throw err;
  }
}
