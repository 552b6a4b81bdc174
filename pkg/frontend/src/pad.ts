// Unrolled-cylinder pressure pad: pointer painting, seam markers, and the
// live heatmap.  Rows run vertically; the top and bottom edges are the same
// physical line on the handle (the seam), drawn dashed on both sides.

import { Brush, DEFAULT_BRUSH, clamp01, combine, decay, splat, zeros } from "./grid.js";

export class PressurePad {
  grid: number[][];
  brush: Brush = { ...DEFAULT_BRUSH };
  private pointer: { row: number; col: number; pressure: number } | null = null;
  private lastTick: number | null = null;

  constructor(
    readonly canvas: HTMLCanvasElement,
    readonly rows: number,
    readonly cols: number,
  ) {
    this.grid = zeros(rows, cols);
    canvas.addEventListener("pointerdown", (ev) => {
      canvas.setPointerCapture(ev.pointerId);
      this.track(ev);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (ev.buttons > 0) this.track(ev);
    });
    const lift = () => {
      this.pointer = null;
    };
    canvas.addEventListener("pointerup", lift);
    canvas.addEventListener("pointercancel", lift);
    canvas.addEventListener("pointerleave", (ev) => {
      if (ev.buttons === 0) lift();
    });
  }

  private track(ev: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const col = ((ev.clientX - rect.left) / rect.width) * this.cols - 0.5;
    const row = ((ev.clientY - rect.top) / rect.height) * this.rows - 0.5;
    const pressure = ev.pressure > 0 && ev.pressure !== 0.5 ? ev.pressure : 1.0;
    this.pointer = { row, col, pressure };
  }

  /** Advance decay and stamp the pointer; called from the 45 Hz emitter. */
  compose(nowMs: number, overlay: number[][] | null): number[][] {
    const dt = this.lastTick === null ? 22 : nowMs - this.lastTick;
    this.lastTick = nowMs;
    this.grid = decay(this.grid, dt);
    if (this.pointer !== null) {
      const field = splat(this.rows, this.cols, this.pointer.row, this.pointer.col, {
        radius: this.brush.radius,
        intensity: this.brush.intensity * this.pointer.pressure,
      });
      this.grid = combine(this.grid, field);
    }
    const frame = overlay ? clamp01(combine(this.grid, overlay)) : this.grid;
    this.render(frame);
    return frame;
  }

  render(frame: number[][]): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    const cw = width / this.cols;
    const ch = height / this.rows;
    ctx.clearRect(0, 0, width, height);
    for (let r = 0; r < this.rows; r++) {
      for (let c = 0; c < this.cols; c++) {
        const v = frame[r][c];
        const hue = 210 - 180 * v;
        ctx.fillStyle = `hsl(${hue}, 80%, ${12 + 55 * v}%)`;
        ctx.fillRect(c * cw + 1, r * ch + 1, cw - 2, ch - 2);
      }
    }
    // seam: the top and bottom edges are neighbours around the cylinder
    ctx.strokeStyle = "#e8b33d";
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(0, 1);
    ctx.lineTo(width, 1);
    ctx.moveTo(0, height - 1);
    ctx.lineTo(width, height - 1);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
