import { describe, expect, it } from "vitest";

import {
  DEFAULT_BRUSH,
  clamp01,
  combine,
  decay,
  maxValue,
  splat,
  wrapDelta,
  zeros,
} from "../src/grid.js";

describe("wrapDelta", () => {
  it("wraps around the circumference", () => {
    expect(wrapDelta(0, 10, 11)).toBe(1); // seam neighbours
    expect(wrapDelta(0, 5, 11)).toBe(5);
    expect(wrapDelta(3, 3, 11)).toBe(0);
    expect(wrapDelta(1, 9, 11)).toBe(3);
  });
});

describe("splat", () => {
  it("peaks at the pointer cell and respects the intensity", () => {
    const g = splat(11, 5, 4, 2, DEFAULT_BRUSH);
    expect(g[4][2]).toBeCloseTo(DEFAULT_BRUSH.intensity, 5);
    expect(maxValue(g)).toBeLessThanOrEqual(1);
    expect(g[4][2]).toBeGreaterThan(g[5][2]);
    expect(g[5][2]).toBeGreaterThan(g[6][2]);
  });

  it("bleeds across the seam, not past the axial edges", () => {
    const g = splat(11, 5, 0, 0, { radius: 1.5, intensity: 1 });
    // row 10 is a physical neighbour of row 0
    expect(g[10][0]).toBeCloseTo(g[1][0], 10);
    expect(g[10][0]).toBeGreaterThan(0.3);
    // nothing wraps along columns
    expect(g[0][4]).toBeLessThan(1e-3);
  });

  it("stays in range for hard presses anywhere fractional", () => {
    const g = splat(11, 5, 7.4, 1.2, { radius: 2.5, intensity: 1 });
    for (const row of g) for (const v of row) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
  });
});

describe("decay and combine", () => {
  it("decays to zero within ~200 ms", () => {
    let g = splat(11, 5, 4, 2, DEFAULT_BRUSH);
    g = decay(g, 200);
    expect(maxValue(g)).toBeLessThan(0.06);
    g = decay(g, 200);
    expect(maxValue(g)).toBeLessThan(0.01);
  });

  it("combine takes the elementwise max", () => {
    const a = splat(11, 5, 2, 1, DEFAULT_BRUSH);
    const b = splat(11, 5, 8, 3, DEFAULT_BRUSH);
    const c = combine(a, b);
    expect(c[2][1]).toBe(a[2][1]);
    expect(c[8][3]).toBe(b[8][3]);
    for (let r = 0; r < 11; r++)
      for (let col = 0; col < 5; col++)
        expect(c[r][col]).toBe(Math.max(a[r][col], b[r][col]));
  });

  it("clamp01 bounds out-of-range values", () => {
    const g = zeros(2, 2);
    g[0][0] = 1.5;
    g[1][1] = -0.2;
    const c = clamp01(g);
    expect(c[0][0]).toBe(1);
    expect(c[1][1]).toBe(0);
  });
});
