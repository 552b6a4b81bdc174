// Small pseudo-3D cylinder thumbnail: reminds the user that pad rows wrap
// around the handle.  Row bands are painted on an upright cylinder, front
// half only, with the seam marked.

export function drawCylinder(
  canvas: HTMLCanvasElement,
  frame: number[][],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rows = frame.length;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const radius = width * 0.32;
  const top = height * 0.12;
  const bottom = height * 0.88;

  // visible half of the circumference: rows map to angular bands
  const visible = Math.ceil(rows / 2) + 1;
  const bandW = (radius * 2) / visible;
  for (let i = 0; i < visible; i++) {
    const r = i % rows;
    const mean = frame[r].reduce((a, b) => a + b, 0) / frame[r].length;
    const hue = 210 - 180 * mean;
    ctx.fillStyle = `hsl(${hue}, 75%, ${15 + 50 * mean}%)`;
    ctx.fillRect(cx - radius + i * bandW, top, bandW + 0.5, bottom - top);
  }
  // rim ellipses
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1.5;
  for (const y of [top, bottom]) {
    ctx.beginPath();
    ctx.ellipse(cx, y, radius, radius * 0.28, 0, 0, Math.PI * 2);
    ctx.stroke();
  }
  // seam on the left edge
  ctx.strokeStyle = "#e8b33d";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(cx - radius, top);
  ctx.lineTo(cx - radius, bottom);
  ctx.stroke();
  ctx.setLineDash([]);
}
