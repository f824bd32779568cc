import { createServer, type Server } from "node:http";
import type { AddressInfo } from "node:net";
import { afterEach, describe, expect, it } from "vitest";
import { readSse, sseFeed } from "../src/sse.js";

describe("sseFeed", () => {
  function collect(chunks: string[]): string[] {
    const events: string[] = [];
    const feed = sseFeed((d) => events.push(d));
    for (const chunk of chunks) feed(chunk);
    return events;
  }

  it("parses whole events", () => {
    expect(collect(["data: one\n\ndata: two\n\n"])).toEqual(["one", "two"]);
  });

  it("handles events split anywhere across chunks", () => {
    expect(collect(["da", "ta: he", "llo\n", "\nda", "ta: bye\n\n"])).toEqual(["hello", "bye"]);
  });

  it("joins multi-line data fields and skips comments", () => {
    expect(collect([": keepalive\ndata: a\ndata: b\n\n"])).toEqual(["a\nb"]);
  });

  it("tolerates CRLF line endings", () => {
    expect(collect(["data: x\r\n\r\n"])).toEqual(["x"]);
  });

  it("ignores unknown fields and blank events", () => {
    expect(collect(["event: tick\nid: 4\n\nretry: 99\n\ndata: real\n\n"])).toEqual(["real"]);
  });

  it("does not fire for an unterminated trailing event", () => {
    expect(collect(["data: torn"])).toEqual([]);
  });
});

describe("readSse", () => {
  let server: Server | null = null;

  afterEach(async () => {
    if (server !== null) {
      await new Promise((resolve) => server!.close(resolve));
      server = null;
    }
  });

  async function listen(s: Server): Promise<string> {
    server = s;
    await new Promise<void>((resolve) => s.listen(0, "127.0.0.1", resolve));
    const { port } = s.address() as AddressInfo;
    return `http://127.0.0.1:${port}/stream`;
  }

  it("collects events until server EOF, then resolves", async () => {
    const url = await listen(
      createServer((_req, res) => {
        res.writeHead(200, { "content-type": "text/event-stream" });
        res.write("data: fir");
        setTimeout(() => {
          res.write("st\n\ndata: second\n\n");
          res.end();
        }, 10);
      }),
    );
    const events: string[] = [];
    let opened = false;
    await readSse(url, { onOpen: () => (opened = true), onEvent: (d) => events.push(d) }, new AbortController().signal);
    expect(opened).toBe(true);
    expect(events).toEqual(["first", "second"]);
  });

  it("throws on a non-200 answer", async () => {
    const url = await listen(
      createServer((_req, res) => {
        res.writeHead(404);
        res.end("nope");
      }),
    );
    await expect(readSse(url, { onEvent: () => {} }, new AbortController().signal)).rejects.toThrow("HTTP 404");
  });

  it("throws when the host is unreachable", async () => {
    // Port 1 is never listening in this sandbox.
    await expect(readSse("http://127.0.0.1:1/stream", { onEvent: () => {} }, new AbortController().signal)).rejects.toThrow();
  });

  it("resolves quietly when aborted mid-stream", async () => {
    const url = await listen(
      createServer((_req, res) => {
        res.writeHead(200, { "content-type": "text/event-stream" });
        res.write("data: one\n\n");
        // Held open on purpose; only the abort ends this read.
      }),
    );
    const ctrl = new AbortController();
    const events: string[] = [];
    const done = readSse(url, { onEvent: (d) => events.push(d) }, ctrl.signal);
    await new Promise((resolve) => setTimeout(resolve, 30));
    ctrl.abort();
    await done;
    expect(events).toEqual(["one"]);
  });
});
