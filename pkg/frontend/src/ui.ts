// DOM wiring for the alignment console: connect form, frame animation,
// control sliders with magnitude presets, traces and the done banner.

import { SessionClient, ProtocolFailure } from "./client.js";
import { CONTROL_LABELS, PresetName, SessionModel } from "./model.js";
import { drawTrace, FrameAnimator } from "./render2d.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class ConsoleUI {
  private model = new SessionModel();
  private client: SessionClient | null = null;
  private animator: FrameAnimator;
  private preset: PresetName = "coarse";
  private sliders: HTMLInputElement[] = [];

  constructor() {
    this.animator = new FrameAnimator(el<HTMLCanvasElement>("frames"));
    this.buildSliders();
    el<HTMLButtonElement>("connect").addEventListener("click", () => this.connect());
    el<HTMLButtonElement>("apply").addEventListener("click", () => this.applyMove());
    el<HTMLButtonElement>("zero").addEventListener("click", () => this.zeroSliders());
    el<HTMLButtonElement>("reset").addEventListener("click", () => this.reset());
    for (const name of ["coarse", "medium", "fine"] as PresetName[]) {
      el<HTMLInputElement>(`preset-${name}`).addEventListener("change", () => {
        this.preset = name;
      });
    }
  }

  private buildSliders(): void {
    const host = el<HTMLDivElement>("controls");
    CONTROL_LABELS.forEach((label, i) => {
      const row = document.createElement("div");
      row.className = "control-row";
      const name = document.createElement("label");
      name.textContent = label;
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "-1";
      slider.max = "1";
      slider.step = "0.01";
      slider.value = "0";
      const readout = document.createElement("span");
      readout.id = `readout-${i}`;
      readout.className = "readout";
      row.append(name, slider, readout);
      host.append(row);
      this.sliders.push(slider);
    });
  }

  private async connect(): Promise<void> {
    const url = el<HTMLInputElement>("server-url").value;
    const seedRaw = el<HTMLInputElement>("seed").value;
    const deterministic = el<HTMLInputElement>("deterministic").checked;
    this.banner("connecting…", "info");
    this.client = new SessionClient(() => new WebSocket(url) as never);
    this.client.onClose = () => this.banner("connection lost — reconnect to resume", "error");
    try {
      await this.client.connect();
      const options: { seed?: number; randomization?: "on" | "off" } = {};
      if (seedRaw) options.seed = Number(seedRaw);
      if (deterministic) options.randomization = "off";
      const { session, snapshot, frames } = await this.client.create(options);
      this.model.applyCreate(session, snapshot, frames);
      this.animator.setFrames(frames.frames_png);
      this.animator.start();
      this.banner(`session ${session}`, "ok");
      this.render();
    } catch (err) {
      this.banner(this.describe(err), "error");
    }
  }

  private async applyMove(): Promise<void> {
    if (!this.client) return;
    try {
      const sliders = this.sliders.map((s) => Number(s.value));
      const deltas = this.model.moveVector(sliders, this.preset);
      this.model.beginMove();
      const { snapshot, frames } = await this.client.step(deltas, "physical");
      this.model.applyStep(snapshot, frames);
      this.animator.setFrames(frames.frames_png);
      this.render();
    } catch (err) {
      this.model.failMove(this.describe(err));
      this.render();
    }
  }

  private async reset(): Promise<void> {
    if (!this.client) return;
    try {
      const { snapshot, frames } = await this.client.reset();
      this.model.applyReset(snapshot, frames);
      this.animator.setFrames(frames.frames_png);
      this.render();
      this.banner("episode reset", "ok");
    } catch (err) {
      this.banner(this.describe(err), "error");
    }
  }

  private zeroSliders(): void {
    for (const s of this.sliders) s.value = "0";
  }

  private describe(err: unknown): string {
    if (err instanceof ProtocolFailure) return `${err.code}: ${err.message}`;
    return err instanceof Error ? err.message : String(err);
  }

  private banner(text: string, kind: "ok" | "info" | "error"): void {
    const node = el<HTMLDivElement>("banner");
    node.textContent = text;
    node.dataset.kind = kind;
  }

  private render(): void {
    const m = this.model;
    el<HTMLSpanElement>("step-counter").textContent = `${m.step}`;
    el<HTMLSpanElement>("visibility").textContent = m.visibility.toPrecision(6);
    el<HTMLSpanElement>("reward").textContent =
      m.lastReward === null ? "—" : m.lastReward.toPrecision(6);
    const clamped = m.clampedControls();
    clamped.forEach((v, i) => {
      el<HTMLSpanElement>(`readout-${i}`).textContent =
        `${v.toExponential(3)} / ±${m.bounds[i].toExponential(2)}`;
    });
    drawTrace(el<HTMLCanvasElement>("vis-trace"),
              m.trace.map((t) => t.visibility), 0, 1, "#2a9d2a");
    const rewards = m.trace.map((t) => t.reward);
    const rMax = Math.max(1, ...rewards.filter((r): r is number => r !== null));
    drawTrace(el<HTMLCanvasElement>("reward-trace"), rewards, -0.1, rMax, "#3a6fd8");
    drawTrace(el<HTMLCanvasElement>("intensity-trace"),
              m.frameTotals, 0, Math.max(...m.frameTotals, 1e-9), "#d87f3a");
    if (m.doneBanner) {
      this.banner(m.doneBanner, m.terminatedUnsafe ? "error" : "ok");
    } else if (m.lastError) {
      this.banner(m.lastError, "error");
    }
  }
}
