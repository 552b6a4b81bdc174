// Canned gesture patterns, one per intent.  The server exposes its own
// base patterns at /patterns.json; these built-ins are the fallback so the
// pad works before that fetch resolves (they mirror the same design: hold
// band, squeeze, axial ramp, chiral turn bumps).

import type { IntentName } from "./protocol.js";
import { clamp01, zeros } from "./grid.js";

export type PatternSet = Record<IntentName, number[][]>;

const HOLD = 0.15;
const SQUEEZE = 0.75;
const RAMP = 0.5;
const BUMP_AMP = 0.3;
const BUMP_PROFILE: Array<[number, number]> = [
  [-1, Math.exp(-((1 / 0.7) ** 2))],
  [0, 1.0],
  [1, Math.exp(-((1 / 1.2) ** 2))],
  [2, Math.exp(-((2 / 1.2) ** 2))],
];

export function builtinPatterns(rows = 11, cols = 5): PatternSet {
  const fill = (v: number) =>
    Array.from({ length: rows }, () => new Array<number>(cols).fill(v));
  const neutral = fill(HOLD);
  const stop = fill(SQUEEZE);
  const speedUp = fill(HOLD).map((row) =>
    row.map((v, c) => v + (RAMP * c) / Math.max(cols - 1, 1)),
  );
  const center = Math.max(1, Math.round(rows / 4));
  const left = fill(HOLD);
  for (const [off, w] of BUMP_PROFILE) {
    const r = (((center + off) % rows) + rows) % rows;
    for (let c = 0; c < cols; c++) left[r][c] += BUMP_AMP * w;
  }
  const right = Array.from({ length: rows }, (_, i) =>
    left[(rows - i) % rows].slice(),
  );
  return {
    turn_left: clamp01(left),
    turn_right: clamp01(right),
    speed_up: clamp01(speedUp),
    stop: clamp01(stop),
    neutral: clamp01(neutral),
  };
}

export async function fetchPatterns(rows: number, cols: number): Promise<PatternSet> {
  try {
    const resp = await fetch("/patterns.json");
    if (!resp.ok) throw new Error(`HTTP ${resp.status}`);
    const doc = (await resp.json()) as { patterns: Record<string, number[][]> };
    return doc.patterns as PatternSet;
  } catch {
    return builtinPatterns(rows, cols);
  }
}

/** Small deterministic RNG so preset streams are reproducible in tests. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** One noisy frame of a preset gesture (what the preset buttons stream). */
export function presetFrame(
  pattern: number[][],
  rng: () => number,
  sigma = 0.02,
): number[][] {
  return pattern.map((row) =>
    row.map((v) => {
      // Box-Muller from two uniforms
      const u = Math.max(rng(), 1e-12);
      const n = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * rng());
      return Math.min(1, Math.max(0, v + sigma * n));
    }),
  );
}

export function presetStream(
  pattern: number[][],
  nFrames: number,
  seed: number,
  sigma = 0.02,
): number[][][] {
  const rng = mulberry32(seed);
  return Array.from({ length: nFrames }, () => presetFrame(pattern, rng, sigma));
}

export function emptyGrid(rows: number, cols: number): number[][] {
  return zeros(rows, cols);
}
