// Top-down SVG rendering of the optical bench from the scene layout.

import type { SceneDoc } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface BenchGeometry {
  positions: Record<string, { x: number; y: number }>;
  portOf(ref: string): { x: number; y: number };
}

const KIND_GLYPH: Record<string, { shape: "box" | "disk" | "wedge"; color: string; label: string }> = {
  laser: { shape: "box", color: "#7c5cff", label: "laser" },
  photon_source: { shape: "disk", color: "#56b6c2", label: "source" },
  bell_source: { shape: "disk", color: "#c678dd", label: "pair" },
  pbs: { shape: "wedge", color: "#61afef", label: "PBS" },
  hwp: { shape: "disk", color: "#98c379", label: "HWP" },
  qwp: { shape: "disk", color: "#e5c07b", label: "QWP" },
  bbo: { shape: "box", color: "#d19a66", label: "BBO" },
  apd: { shape: "box", color: "#e06c75", label: "APD" },
  smf: { shape: "box", color: "#5c6370", label: "SMF" },
  prism: { shape: "wedge", color: "#abb2bf", label: "prism" },
};

function el(name: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

export function layoutGeometry(scene: SceneDoc, width: number, height: number): BenchGeometry {
  const coords = Object.values(scene.layout);
  const xs = coords.map((c) => c[0]);
  const ys = coords.map((c) => c[1]);
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 1);
  const minY = Math.min(...ys, 0);
  const maxY = Math.max(...ys, 1);
  const pad = 70;
  const sx = (width - 2 * pad) / Math.max(maxX - minX, 1e-6);
  const sy = (height - 2 * pad) / Math.max(maxY - minY, 1e-6);
  const positions: Record<string, { x: number; y: number }> = {};
  for (const comp of scene.components) {
    const [lx, ly] = scene.layout[comp.id] ?? [0, 0];
    positions[comp.id] = {
      x: pad + (lx - minX) * sx,
      y: pad + (ly - minY) * sy,
    };
  }
  return {
    positions,
    portOf(ref: string) {
      const id = ref.split(".")[0];
      return positions[id] ?? { x: 0, y: 0 };
    },
  };
}

export interface BenchCallbacks {
  onRotate(component: string, direction: 1 | -1): void;
  onSelect(component: string): void;
  onFire(): void;
}

export function renderBench(
  svg: SVGSVGElement,
  scene: SceneDoc,
  sceneName: string | null,
  geometry: BenchGeometry,
  callbacks: BenchCallbacks,
): void {
  svg.innerHTML = "";
  // beam segments first, under the components
  for (const link of scene.links) {
    const a = geometry.portOf(link.from);
    const b = geometry.portOf(link.to);
    const line = el("line", {
      x1: a.x,
      y1: a.y,
      x2: b.x,
      y2: b.y,
      class: "beam",
      "data-link": `${link.from}->${link.to}`,
    });
    svg.appendChild(line);
  }
  const plateKinds = new Set(["hwp", "qwp"]);
  for (const comp of scene.components) {
    const glyph = KIND_GLYPH[comp.kind] ?? KIND_GLYPH.prism;
    const { x, y } = geometry.positions[comp.id];
    const group = el("g", { class: "component", "data-id": comp.id });
    if (glyph.shape === "disk") {
      group.appendChild(el("circle", { cx: x, cy: y, r: 16, fill: glyph.color }));
    } else if (glyph.shape === "wedge") {
      group.appendChild(
        el("polygon", {
          points: `${x - 16},${y + 14} ${x + 16},${y + 14} ${x},${y - 16}`,
          fill: glyph.color,
        }),
      );
    } else {
      group.appendChild(
        el("rect", { x: x - 18, y: y - 13, width: 36, height: 26, rx: 4, fill: glyph.color }),
      );
    }
    const title = el("text", { x, y: y + 32, class: "comp-label", "text-anchor": "middle" });
    title.textContent = `${glyph.label} ${comp.id}`;
    group.appendChild(title);

    if (plateKinds.has(comp.kind)) {
      const knob = el("text", {
        x,
        y: y + 4,
        class: "knob-value",
        "text-anchor": "middle",
        "data-knob": comp.id,
      });
      knob.textContent = `${comp.params.angle_deg ?? 0}°`;
      group.appendChild(knob);
      const minus = el("text", { x: x - 26, y: y + 5, class: "knob-btn", "data-dir": -1 });
      minus.textContent = "−";
      const plus = el("text", { x: x + 20, y: y + 5, class: "knob-btn", "data-dir": 1 });
      plus.textContent = "+";
      minus.addEventListener("click", (e) => {
        e.stopPropagation();
        callbacks.onRotate(comp.id, -1);
      });
      plus.addEventListener("click", (e) => {
        e.stopPropagation();
        callbacks.onRotate(comp.id, 1);
      });
      group.appendChild(minus);
      group.appendChild(plus);
    }
    if (scene.detectors.includes(comp.id)) {
      const badge = el("text", {
        x,
        y: y - 22,
        class: "counter-badge",
        "text-anchor": "middle",
        "data-counter": comp.id,
      });
      badge.textContent = "0";
      group.appendChild(badge);
    }
    if (scene.sources.includes(comp.id)) {
      group.classList.add("fire-source");
      group.addEventListener("click", (e) => {
        e.stopPropagation();
        callbacks.onFire();
      });
      const hint = el("text", { x, y: y - 22, class: "fire-hint", "text-anchor": "middle" });
      hint.textContent = "click to fire";
      group.appendChild(hint);
    } else {
      group.addEventListener("click", () => callbacks.onSelect(comp.id));
    }
    svg.appendChild(group);
  }
  void sceneName;
}

export function updateKnob(svg: SVGSVGElement, component: string, valueDeg: number): void {
  const node = svg.querySelector(`[data-knob="${component}"]`);
  if (node) {
    node.textContent = `${valueDeg}°`;
  }
}

export function updateCounter(svg: SVGSVGElement, detector: string, value: number): void {
  const node = svg.querySelector(`[data-counter="${detector}"]`);
  if (node) {
    node.textContent = String(value);
  }
}

const PHOTON_COLORS = ["#ff6b6b", "#feca57", "#48dbfb", "#ff9ff3", "#1dd1a1"];

export function animatePhoton(svg: SVGSVGElement, link: string, order: number): void {
  const line = svg.querySelector(`[data-link="${link}"]`) as SVGLineElement | null;
  if (!line) return;
  const x1 = Number(line.getAttribute("x1"));
  const y1 = Number(line.getAttribute("y1"));
  const x2 = Number(line.getAttribute("x2"));
  const y2 = Number(line.getAttribute("y2"));
  const dot = el("circle", {
    cx: x1,
    cy: y1,
    r: 6,
    class: "photon",
    fill: PHOTON_COLORS[order % PHOTON_COLORS.length],
  });
  svg.appendChild(dot);
  const t0 = performance.now();
  const duration = 350;
  const tick = (t: number) => {
    const f = Math.min((t - t0) / duration, 1);
    dot.setAttribute("cx", String(x1 + (x2 - x1) * f));
    dot.setAttribute("cy", String(y1 + (y2 - y1) * f));
    if (f < 1) {
      requestAnimationFrame(tick);
    } else {
      dot.remove();
    }
  };
  requestAnimationFrame(tick);
}
