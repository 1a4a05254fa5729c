// 2D projection of the Bloch sphere for the side panel.
//
// Orthographic projection from a fixed oblique viewpoint; pure geometry
// here, canvas drawing in the single draw function below.

import type { Vec3 } from "./types";

export interface Point2 {
  x: number;
  y: number;
  depth: number;
}

// viewing direction: slightly above and to the right of the +x axis
const COS_T = Math.cos(Math.PI / 9);
const SIN_T = Math.sin(Math.PI / 9);

export function project(v: Vec3, radius: number): Point2 {
  const [x, y, z] = v;
  // rotate about z, then tilt about the horizontal axis
  const x1 = x * COS_T - y * SIN_T;
  const y1 = x * SIN_T + y * COS_T;
  const y2 = y1;
  const z2 = z * COS_T - x1 * SIN_T;
  const depth = x1 * COS_T + z * SIN_T;
  return { x: y2 * radius, y: -z2 * radius, depth };
}

export function drawBlochSphere(
  canvas: HTMLCanvasElement,
  vector: Vec3 | null,
  trail: Vec3[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  const r = Math.min(w, h) * 0.4;
  ctx.clearRect(0, 0, w, h);
  ctx.save();
  ctx.translate(w / 2, h / 2);

  // sphere outline and equator
  ctx.strokeStyle = "#8a93a6";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(0, 0, r, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath();
  ctx.ellipse(0, 0, r, r * SIN_T, 0, 0, 2 * Math.PI);
  ctx.stroke();

  // axes with the conventional pole labels
  const axes: { v: Vec3; label: string }[] = [
    { v: [0, 0, 1], label: "|H⟩" },
    { v: [0, 0, -1], label: "|V⟩" },
    { v: [1, 0, 0], label: "|D⟩" },
    { v: [0, 1, 0], label: "|+i⟩" },
  ];
  ctx.fillStyle = "#8a93a6";
  ctx.font = "11px sans-serif";
  for (const { v, label } of axes) {
    const p = project(v, r);
    ctx.beginPath();
    ctx.moveTo(0, 0);
    ctx.lineTo(p.x, p.y);
    ctx.stroke();
    ctx.fillText(label, p.x * 1.12 - 8, p.y * 1.12 + 4);
  }

  // recent trail, fading out
  trail.slice(-12).forEach((v, i, arr) => {
    const p = project(v, r);
    ctx.fillStyle = `rgba(97, 175, 239, ${0.15 + (0.5 * i) / arr.length})`;
    ctx.beginPath();
    ctx.arc(p.x, p.y, 3, 0, 2 * Math.PI);
    ctx.fill();
  });

  if (vector) {
    const p = project(vector, r);
    ctx.strokeStyle = "#e5c07b";
    ctx.lineWidth = 2.5;
    ctx.beginPath();
    ctx.moveTo(0, 0);
    ctx.lineTo(p.x, p.y);
    ctx.stroke();
    ctx.fillStyle = "#e5c07b";
    ctx.beginPath();
    ctx.arc(p.x, p.y, 5, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.restore();
}
