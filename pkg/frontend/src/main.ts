// Controller: wires the experiment selector, bench, Bloch panel, event log
// and herald banner to the session service.

import {
  animatePhoton,
  layoutGeometry,
  renderBench,
  updateCounter,
  updateKnob,
  type BenchGeometry,
} from "./bench";
import { drawBlochSphere } from "./bloch";
import { ApiClient, apiBase } from "./client";
import { explain, INDISTINGUISHABILITY_NOTE } from "./explain";
import { initialView, reduce, type ViewState } from "./reducer";
import { normalize, rotate } from "./knobs";
import type { SceneDoc, ServerEvent } from "./types";

const api = new ApiClient(apiBase());

interface Ui {
  selector: HTMLSelectElement;
  description: HTMLElement;
  bench: SVGSVGElement;
  bloch: HTMLCanvasElement;
  blochLabel: HTMLElement;
  banner: HTMLElement;
  heraldStats: HTMLElement;
  log: HTMLElement;
  explainPanel: HTMLElement;
  fireButtons: HTMLElement;
  note: HTMLElement;
}

function grab(): Ui {
  const byId = (id: string) => {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  };
  return {
    selector: byId("experiment") as unknown as HTMLSelectElement,
    description: byId("description"),
    bench: byId("bench") as unknown as SVGSVGElement,
    bloch: byId("bloch") as unknown as HTMLCanvasElement,
    blochLabel: byId("bloch-label"),
    banner: byId("herald-banner"),
    heraldStats: byId("herald-stats"),
    log: byId("event-log"),
    explainPanel: byId("explain"),
    fireButtons: byId("fire-buttons"),
    note: byId("photon-note"),
  };
}

class BenchController {
  private sessionId: string | null = null;
  private scene: SceneDoc | null = null;
  private sceneName: string | null = null;
  private geometry: BenchGeometry | null = null;
  private view: ViewState = initialView();
  private closeStream: (() => void) | null = null;
  private animationOrder = 0;

  constructor(private ui: Ui) {}

  async start(): Promise<void> {
    const { scenes } = await api.listScenes();
    for (const info of scenes) {
      const option = document.createElement("option");
      option.value = info.name;
      option.textContent = info.name;
      this.ui.selector.appendChild(option);
    }
    this.ui.selector.addEventListener("change", () => {
      void this.select(this.ui.selector.value);
    });
    this.ui.note.textContent = INDISTINGUISHABILITY_NOTE;
    for (const shots of [1, 10, 100]) {
      const btn = document.createElement("button");
      btn.textContent = `fire ×${shots}`;
      btn.addEventListener("click", () => void this.fire(shots));
      this.ui.fireButtons.appendChild(btn);
    }
    await this.select(scenes[0].name);
  }

  /** Tear down the previous session and build the bench for a new one. */
  async select(name: string): Promise<void> {
    if (this.closeStream) {
      this.closeStream();
      this.closeStream = null;
    }
    if (this.sessionId) {
      void api.deleteSession(this.sessionId).catch(() => undefined);
    }
    const created = await api.createSession(name);
    this.sessionId = created.id;
    this.sceneName = name;
    const state = await api.getState(created.id);
    this.scene = state.scene;
    this.view = initialView();
    for (const comp of state.scene.components) {
      const angle = comp.params.angle_deg;
      if (typeof angle === "number") {
        this.view.knobs[comp.id] = normalize(angle);
      }
    }
    const { scenes } = await api.listScenes();
    this.ui.description.textContent =
      scenes.find((s) => s.name === name)?.description ?? "";
    this.geometry = layoutGeometry(state.scene, 900, 420);
    renderBench(this.ui.bench, state.scene, name, this.geometry, {
      onRotate: (component, direction) => void this.rotatePlate(component, direction),
      onSelect: (component) => this.showExplanation(component),
      onFire: () => void this.fire(1),
    });
    this.ui.banner.classList.remove("visible");
    this.ui.log.textContent = "";
    this.redraw();
    this.closeStream = api.streamEvents(created.id, 0, (ev) => this.onEvent(ev));
  }

  /** Optimistic knob turn, reconciled by the server echo event. */
  async rotatePlate(component: string, direction: 1 | -1): Promise<void> {
    if (!this.sessionId || !this.scene) return;
    const comp = this.scene.components.find((c) => c.id === component);
    if (!comp) return;
    const step = comp.angle_step_deg;
    const target = rotate(this.view.knobs[component] ?? 0, direction, step);
    updateKnob(this.ui.bench, component, target); // optimistic
    try {
      await api.setParam(this.sessionId, component, "angle_deg", target, true);
    } catch (err) {
      // roll back to the last confirmed value
      updateKnob(this.ui.bench, component, this.view.knobs[component] ?? 0);
      console.error(err);
    }
  }

  async fire(shots: number): Promise<void> {
    if (!this.sessionId) return;
    this.ui.banner.classList.remove("visible");
    await api.fire(this.sessionId, shots);
  }

  private onEvent(ev: ServerEvent): void {
    this.view = reduce(this.view, ev);
    if (ev.kind === "segment_traversed" && ev.link) {
      animatePhoton(this.ui.bench, ev.link, this.animationOrder++);
    }
    if (ev.kind === "param_changed" && ev.component && typeof ev.value === "number") {
      updateKnob(this.ui.bench, ev.component, normalize(ev.value));
    }
    if (ev.kind === "herald" && ev.ok) {
      this.ui.banner.textContent = `gate heralded: ${ev.pattern}`;
      this.ui.banner.classList.add("visible");
    }
    this.redraw();
  }

  private redraw(): void {
    for (const [det, value] of Object.entries(this.view.counters)) {
      updateCounter(this.ui.bench, det, value);
    }
    const updates = this.view.blochUpdates;
    const last = updates.length ? updates[updates.length - 1] : null;
    drawBlochSphere(
      this.ui.bloch,
      last ? last.bloch : null,
      updates.map((u) => u.bloch),
    );
    this.ui.blochLabel.textContent = last
      ? `after ${last.component} (shot ${last.shot ?? "-"})`
      : "no plate crossings yet";
    this.ui.heraldStats.textContent = this.view.heraldTotal
      ? `heralded ${this.view.heraldOk} / ${this.view.heraldTotal} shots`
      : "";
    this.ui.log.textContent = this.view.log.slice(-14).join("\n");
  }

  private showExplanation(component: string): void {
    if (!this.scene) return;
    const comp = this.scene.components.find((c) => c.id === component);
    if (!comp) return;
    const info = explain(comp.kind, this.sceneName);
    const link = info.link
      ? `<a href="${info.link}" target="_blank" rel="noreferrer">background reading</a>`
      : "";
    this.ui.explainPanel.innerHTML =
      `<h3>${info.title} <code>${comp.id}</code></h3>` +
      `<p>${info.role.replace(/\n\n/g, "</p><p>")}</p>${link}`;
  }
}

window.addEventListener("DOMContentLoaded", () => {
  const controller = new BenchController(grab());
  controller.start().catch((err) => {
    const banner = document.getElementById("herald-banner");
    if (banner) {
      banner.textContent = `cannot reach the bench service: ${err}`;
      banner.classList.add("visible", "error");
    }
  });
});
