// Top-down arena for the simulated robot: start zone on the right, a table
// with the water bottle on the left, and a narrow passage between them.
// The robot pose comes exclusively from server pose messages; this view
// never integrates motion itself.

export interface Pose {
  x: number;
  y: number;
  heading: number;
}

interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

// world coordinates in meters, origin at the start zone center
const WORLD = { minX: -4.2, maxX: 1.2, minY: -1.8, maxY: 1.8 };
const WALLS: Rect[] = [
  // the narrow passage: two wall slabs leaving a 0.8 m gap at y ~ 0
  { x: -2.2, y: WORLD.minY, w: 0.3, h: 1.4 },
  { x: -2.2, y: 0.4, w: 0.3, h: 1.4 },
];
const TABLE: Rect = { x: -4.0, y: -0.55, w: 0.7, h: 1.1 };
const START: Rect = { x: -0.45, y: -0.6, w: 1.2, h: 1.2 };

export class ArenaView {
  private trail: Array<[number, number]> = [];

  constructor(readonly canvas: HTMLCanvasElement) {}

  private toPx(x: number, y: number): [number, number] {
    const { width, height } = this.canvas;
    const sx = (x - WORLD.minX) / (WORLD.maxX - WORLD.minX);
    const sy = (y - WORLD.minY) / (WORLD.maxY - WORLD.minY);
    return [sx * width, height - sy * height];
  }

  reset(): void {
    this.trail = [];
  }

  render(pose: Pose): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);

    const rect = (r: Rect, fill: string) => {
      const [x0, y1] = this.toPx(r.x, r.y);
      const [x1, y0] = this.toPx(r.x + r.w, r.y + r.h);
      ctx.fillStyle = fill;
      ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    };
    rect(START, "#1d3a24");
    rect(TABLE, "#3a2d1d");
    for (const wall of WALLS) rect(wall, "#555");

    // the bottle to fetch
    const [bx, by] = this.toPx(TABLE.x + TABLE.w / 2, 0);
    ctx.fillStyle = "#3d8fe8";
    ctx.beginPath();
    ctx.arc(bx, by, 6, 0, Math.PI * 2);
    ctx.fill();

    this.trail.push([pose.x, pose.y]);
    if (this.trail.length > 2000) this.trail.shift();
    ctx.strokeStyle = "rgba(232, 179, 61, 0.7)";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    this.trail.forEach(([x, y], i) => {
      const [px, py] = this.toPx(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();

    // robot triangle
    const [rx, ry] = this.toPx(pose.x, pose.y);
    const size = 11;
    ctx.save();
    ctx.translate(rx, ry);
    ctx.rotate(-pose.heading); // canvas y is flipped
    ctx.fillStyle = "#d8dde5";
    ctx.beginPath();
    ctx.moveTo(size, 0);
    ctx.lineTo(-size * 0.7, size * 0.55);
    ctx.lineTo(-size * 0.7, -size * 0.55);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }
}
