import { describe, expect, it } from "vitest";

import { decodeLines, encode, INTENTS } from "../src/protocol.js";

describe("encode", () => {
  it("terminates every message with a newline", () => {
    const text = encode({ type: "mode", mode: "live" });
    expect(text.endsWith("\n")).toBe(true);
    expect(JSON.parse(text)).toEqual({ type: "mode", mode: "live" });
  });

  it("frame grids survive a round trip exactly", () => {
    const grid = [[0.125, 0.333333333333333], [1, 0]];
    const text = encode({ type: "frame", t: 22.5, grid });
    const back = JSON.parse(text);
    expect(back.grid).toEqual(grid);
    expect(back.t).toBe(22.5);
  });
});

describe("decodeLines", () => {
  it("splits complete lines and keeps the remainder", () => {
    const chunk =
      '{"type":"pose","x":0,"y":0,"heading":0}\n' +
      '{"type":"command","t":1600,"intent":"stop","linear_mps":0,"angular_rps":0}\n' +
      '{"type":"int';
    const { msgs, rest } = decodeLines(chunk);
    expect(msgs).toHaveLength(2);
    expect(msgs[0].type).toBe("pose");
    expect(msgs[1].type).toBe("command");
    expect(rest).toBe('{"type":"int');
    const { msgs: more } = decodeLines(rest + 'ent","t":1700,"label":"stop","buffer":[]}\n');
    expect(more).toHaveLength(1);
    expect(more[0].type).toBe("intent");
  });

  it("skips blank lines", () => {
    const { msgs, rest } = decodeLines('\n\n{"type":"error","error":"x"}\n\n');
    expect(msgs).toHaveLength(1);
    expect(rest).toBe("");
  });
});

describe("intent vocabulary", () => {
  it("is the five-label set in wire order", () => {
    expect(INTENTS).toEqual([
      "turn_left", "turn_right", "speed_up", "stop", "neutral",
    ]);
  });
});
