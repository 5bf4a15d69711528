// SessionModel: the console's view state. Holds exactly what the server
// reported (visibility and rewards are never recomputed client-side),
// enforces one in-flight step at a time, and clamps control readouts to
// their bounds for display.

import { FrameBatch, Snapshot } from "./protocol.js";

export type PresetName = "coarse" | "medium" | "fine";

export const PRESET_SCALES: Record<PresetName, number> = {
  coarse: 1.0,
  medium: 0.1,
  fine: 0.01,
};

export const CONTROL_LABELS = [
  "mirror 2 x (rad)",
  "mirror 2 y (rad)",
  "BS 2 x (rad)",
  "BS 2 y (rad)",
  "lens 2 (mm)",
];

export interface TracePoint {
  step: number;
  visibility: number;
  reward: number | null;
}

export class SessionModel {
  sessionId: string | null = null;
  step = 0;
  controls: number[] = [0, 0, 0, 0, 0];
  bounds: number[] = [1, 1, 1, 1, 1];
  episodeRadius = 0;
  visibility = 0;
  lastReward: number | null = null;
  done = false;
  terminatedUnsafe = false;
  trace: TracePoint[] = [];
  frames: string[] = [];
  frameTotals: number[] = [];
  frameSeq = -1;
  moveInFlight = false;
  lastError: string | null = null;
  moveTimestamps: number[] = [];

  get doneBanner(): string | null {
    if (!this.done) return null;
    if (this.terminatedUnsafe) {
      return `episode terminated: move left the safe range (penalty ${this.lastReward})`;
    }
    return "episode complete (100 moves)";
  }

  clampedControls(): number[] {
    return this.controls.map((v, i) =>
      Math.min(Math.max(v, -this.bounds[i]), this.bounds[i]));
  }

  moveVector(sliders: number[], preset: PresetName): number[] {
    if (sliders.length !== 5) throw new Error("need 5 slider values");
    const scale = PRESET_SCALES[preset];
    return sliders.map((s, i) => {
      if (!Number.isFinite(s) || Math.abs(s) > 1) {
        throw new Error(`slider ${i} must lie in [-1, 1]`);
      }
      return s * scale * this.bounds[i];
    });
  }

  beginMove(): void {
    if (this.moveInFlight) throw new Error("a move is already in flight");
    if (this.done) throw new Error("episode is done; reset first");
    this.moveInFlight = true;
  }

  failMove(message: string): void {
    this.moveInFlight = false;
    this.lastError = message;
  }

  private applyFrames(batch: FrameBatch): void {
    if (batch.frames_png.length !== batch.totals.length) {
      throw new Error("frame batch totals out of step with frames");
    }
    this.frames = batch.frames_png;
    this.frameTotals = batch.totals;
    this.frameSeq = batch.seq;
  }

  applyCreate(session: string | null, snapshot: Snapshot, frames: FrameBatch): void {
    this.sessionId = session;
    this.applySnapshot(snapshot, frames, true);
  }

  applyReset(snapshot: Snapshot, frames: FrameBatch): void {
    this.applySnapshot(snapshot, frames, true);
  }

  applyStep(snapshot: Snapshot, frames: FrameBatch): void {
    if (!this.moveInFlight) throw new Error("no move in flight");
    this.moveInFlight = false;
    this.moveTimestamps.push(Date.now());
    this.applySnapshot(snapshot, frames, false);
    this.trace.push({
      step: snapshot.step,
      visibility: snapshot.visibility,
      reward: snapshot.reward,
    });
  }

  private applySnapshot(snapshot: Snapshot, frames: FrameBatch, fresh: boolean): void {
    if (!fresh && snapshot.seq <= this.frameSeq) {
      throw new Error(`stale snapshot seq ${snapshot.seq} after ${this.frameSeq}`);
    }
    this.step = snapshot.step;
    this.controls = snapshot.control_state.slice();
    this.bounds = snapshot.control_bounds.slice();
    this.episodeRadius = snapshot.episode_radius;
    this.visibility = snapshot.visibility;
    this.lastReward = snapshot.reward;
    this.done = snapshot.done;
    this.terminatedUnsafe = snapshot.terminated_unsafe;
    this.lastError = null;
    if (fresh) {
      this.trace = [{ step: snapshot.step, visibility: snapshot.visibility, reward: null }];
      this.done = snapshot.done ?? false;
      this.moveInFlight = false;
    }
    this.applyFrames(frames);
  }

  restoreHistory(records: Snapshot[]): void {
    this.trace = records.map((r) => ({
      step: r.step,
      visibility: r.visibility,
      reward: r.reward ?? null,
    }));
    const last = records[records.length - 1];
    if (last) {
      this.step = last.step;
      this.controls = last.control_state.slice();
      this.bounds = last.control_bounds.slice();
      this.visibility = last.visibility;
      this.lastReward = last.reward ?? null;
      this.done = last.done ?? false;
      this.terminatedUnsafe = last.terminated_unsafe ?? false;
    }
  }
}
