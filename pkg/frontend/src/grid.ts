// Pressure-grid math for the unrolled-cylinder pad.  The row axis wraps
// (row 0 and row rows-1 are physical neighbours on the handle); columns do
// not.  All values stay in [0, 1].

export interface Brush {
  radius: number; // cells
  intensity: number; // peak pressure in [0, 1]
}

export const DEFAULT_BRUSH: Brush = { radius: 1.6, intensity: 0.85 };

export function zeros(rows: number, cols: number): number[][] {
  return Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
}

export function clone(grid: number[][]): number[][] {
  return grid.map((row) => row.slice());
}

/** Circular distance along the wrap axis. */
export function wrapDelta(a: number, b: number, rows: number): number {
  const d = Math.abs(a - b) % rows;
  return Math.min(d, rows - d);
}

/**
 * Pressure field of a fingertip at (row, col), Gaussian falloff, wrapping
 * across the row seam.  Fractional positions are fine.
 */
export function splat(
  rows: number,
  cols: number,
  row: number,
  col: number,
  brush: Brush,
): number[][] {
  const out = zeros(rows, cols);
  const s2 = brush.radius * brush.radius;
  for (let r = 0; r < rows; r++) {
    const dr = wrapDelta(r, ((row % rows) + rows) % rows, rows);
    for (let c = 0; c < cols; c++) {
      const dc = c - col;
      const v = brush.intensity * Math.exp(-(dr * dr + dc * dc) / s2);
      out[r][c] = v < 1e-4 ? 0 : Math.min(1, v);
    }
  }
  return out;
}

/** Elementwise max: pressing somewhere never lowers pressure elsewhere. */
export function combine(a: number[][], b: number[][]): number[][] {
  return a.map((row, r) => row.map((v, c) => Math.max(v, b[r][c])));
}

/**
 * Exponential decay toward zero; with tau ~ 70 ms the pad visually clears
 * about 200 ms after the pointer lifts.
 */
export function decay(grid: number[][], dtMs: number, tauMs = 70): number[][] {
  const k = Math.exp(-dtMs / tauMs);
  return grid.map((row) => row.map((v) => (v * k < 1e-3 ? 0 : v * k)));
}

export function clamp01(grid: number[][]): number[][] {
  return grid.map((row) => row.map((v) => Math.min(1, Math.max(0, v))));
}

export function maxValue(grid: number[][]): number {
  let m = 0;
  for (const row of grid) for (const v of row) m = Math.max(m, v);
  return m;
}
