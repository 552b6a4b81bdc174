import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { FrameEmitter } from "../src/emitter.js";
import { zeros } from "../src/grid.js";

describe("FrameEmitter", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("emits at 45 Hz over a simulated 10 s window", () => {
    let sent = 0;
    const emitter = new FrameEmitter(
      () => zeros(11, 5),
      () => {
        sent++;
        return true;
      },
      { now: () => Date.now() },
    );
    emitter.start();
    vi.advanceTimersByTime(10_000);
    emitter.stop();
    const rate = sent / 10;
    expect(rate).toBeGreaterThanOrEqual(43);
    expect(rate).toBeLessThanOrEqual(47);
  });

  it("drops oldest frames under backpressure and recovers", () => {
    let accept = false;
    const seen: number[] = [];
    const emitter = new FrameEmitter(
      () => zeros(2, 2),
      (t) => {
        if (!accept) return false;
        seen.push(t);
        return true;
      },
      { maxQueue: 5, now: () => Date.now() },
    );
    emitter.start();
    vi.advanceTimersByTime(1000); // ~45 composed, queue capped at 5
    expect(emitter.stats.queued).toBe(5);
    expect(emitter.stats.dropped).toBeGreaterThan(30);
    expect(emitter.stats.sent).toBe(0);

    accept = true;
    vi.advanceTimersByTime(100);
    emitter.stop();
    expect(emitter.stats.queued).toBe(0);
    // the retained frames are the newest ones, in order
    for (let i = 1; i < seen.length; i++) {
      expect(seen[i]).toBeGreaterThanOrEqual(seen[i - 1]);
    }
  });

  it("start is idempotent and stop halts emission", () => {
    let sent = 0;
    const emitter = new FrameEmitter(
      () => zeros(2, 2),
      () => {
        sent++;
        return true;
      },
      { now: () => Date.now() },
    );
    emitter.start();
    emitter.start();
    vi.advanceTimersByTime(1000);
    const afterFirst = sent;
    expect(afterFirst).toBeGreaterThan(40);
    expect(afterFirst).toBeLessThan(50); // double-start must not double the rate
    emitter.stop();
    vi.advanceTimersByTime(1000);
    expect(sent).toBe(afterFirst);
  });
});
