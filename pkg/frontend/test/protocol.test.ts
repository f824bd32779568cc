import { describe, expect, it } from "vitest";
import { parseFrame, parseReply, parseServerLine } from "../src/protocol.js";

// Captured verbatim from a running server.
const FRAME_LINE =
  '{"type":"frame","seq":1,"t_ms":100,"clock":"sim","phase":"FILL_A","mode":"AUTO",' +
  '"upper_cmd":"OPEN","lower_cmd":"CLOSED","upper_pos":0.2,"lower_pos":0.0,' +
  '"upper_closed_sw":false,"lower_closed_sw":true,"upper_temp_c":25.0,"lower_temp_c":25.0,' +
  '"level_high":false,"level_low":true,"alarms":[]}';

describe("parseServerLine", () => {
  it("accepts a live frame line", () => {
    const msg = parseServerLine(FRAME_LINE);
    expect(msg).not.toBeNull();
    expect(msg!.type).toBe("frame");
    if (msg!.type !== "frame") return;
    expect(msg!.seq).toBe(1);
    expect(msg!.phase).toBe("FILL_A");
    expect(msg!.upper_cmd).toBe("OPEN");
    expect(msg!.lower_cmd).toBe("CLOSED");
    expect(msg!.upper_temp_c).toBe(25.0);
    expect(msg!.alarms).toEqual([]);
  });

  it("accepts FAULT temperature readings", () => {
    const line = FRAME_LINE.replace('"upper_temp_c":25.0', '"upper_temp_c":"FAULT"');
    const msg = parseServerLine(line);
    expect(msg).not.toBeNull();
    if (msg!.type !== "frame") throw new Error("expected frame");
    expect(msg!.upper_temp_c).toBe("FAULT");
    expect(msg!.lower_temp_c).toBe(25.0);
  });

  it("accepts ack and nack replies", () => {
    expect(parseServerLine('{"type":"ack","id":"c-1"}')).toEqual({ type: "ack", id: "c-1" });
    expect(parseServerLine('{"type":"nack","id":"c-2","reason":"not control holder"}')).toEqual({
      type: "nack",
      id: "c-2",
      reason: "not control holder",
    });
    expect(parseServerLine('{"type":"nack","id":null,"reason":"malformed message"}')).toEqual({
      type: "nack",
      id: null,
      reason: "malformed message",
    });
  });

  it("rejects garbage without throwing", () => {
    expect(parseServerLine("")).toBeNull();
    expect(parseServerLine("{nonsense")).toBeNull();
    expect(parseServerLine('"just a string"')).toBeNull();
    expect(parseServerLine('{"type":"mystery"}')).toBeNull();
    expect(parseServerLine("[1,2,3]")).toBeNull();
  });
});

describe("parseFrame", () => {
  const good = JSON.parse(FRAME_LINE) as Record<string, unknown>;

  it("rejects a frame missing or corrupting any checked field", () => {
    for (const [key, bad] of [
      ["seq", 0],
      ["seq", 1.5],
      ["seq", "1"],
      ["t_ms", "soon"],
      ["phase", "SPIN"],
      ["mode", "TURBO"],
      ["upper_cmd", "AJAR"],
      ["lower_cmd", 1],
      ["upper_pos", "half"],
      ["upper_closed_sw", "yes"],
      ["upper_temp_c", "HOT"],
      ["alarms", "none"],
      ["alarms", [1, 2]],
    ] as const) {
      expect(parseFrame({ ...good, [key]: bad }), `${key}=${String(bad)}`).toBeNull();
    }
  });

  it("rejects non-objects", () => {
    expect(parseFrame(null)).toBeNull();
    expect(parseFrame(7)).toBeNull();
  });
});

describe("parseReply", () => {
  it("rejects malformed replies", () => {
    expect(parseReply({ type: "ack" })).toBeNull(); // id missing entirely
    expect(parseReply({ type: "ack", id: 3 })).toBeNull();
    expect(parseReply({ type: "nack", id: "x", reason: 5 })).toBeNull();
  });
});
