import { describe, expect, it } from "vitest";

import { SessionModel } from "../src/model.js";
import { FrameBatch, Snapshot } from "../src/protocol.js";

const BOUNDS = [2.6e-3, 1.8e-3, 1.3e-3, 0.9e-3, 7.5];

function snapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    seq: 1,
    step: 0,
    control_state: [1e-3, 0, 0, 0, 2.0],
    control_bounds: BOUNDS.slice(),
    visibility: 0.42,
    reward: null,
    done: false,
    terminated_unsafe: false,
    episode_radius: 0.71,
    wall_time: 0,
    ...overrides,
  };
}

function frames(seq: number): FrameBatch {
  return {
    seq,
    step: 0,
    frames_png: Array(16).fill("iVBORw0KGgo="),
    totals: Array(16).fill(0.5),
    shape: [16, 64, 64],
  };
}

describe("SessionModel", () => {
  it("stores server values verbatim on create", () => {
    const m = new SessionModel();
    m.applyCreate("abc", snapshot(), frames(1));
    expect(m.sessionId).toBe("abc");
    expect(m.visibility).toBe(0.42);
    expect(m.trace).toHaveLength(1);
    expect(m.frames).toHaveLength(16);
  });

  it("clamps control readouts to their bounds", () => {
    const m = new SessionModel();
    const snap = snapshot({ control_state: [5e-3, 0, 0, 0, -9.0] });
    m.applyCreate("s", snap, frames(1));
    const clamped = m.clampedControls();
    expect(clamped[0]).toBe(BOUNDS[0]);
    expect(clamped[4]).toBe(-BOUNDS[4]);
  });

  it("scales moves by the magnitude preset", () => {
    const m = new SessionModel();
    m.applyCreate("s", snapshot(), frames(1));
    expect(m.moveVector([1, 0, 0, 0, 0], "coarse")[0]).toBeCloseTo(2.6e-3, 12);
    expect(m.moveVector([1, 0, 0, 0, 0], "medium")[0]).toBeCloseTo(2.6e-4, 12);
    expect(m.moveVector([0, 0, 0, 0, -1], "fine")[4]).toBeCloseTo(-0.075, 12);
    expect(() => m.moveVector([2, 0, 0, 0, 0], "coarse")).toThrow();
    expect(() => m.moveVector([0, 0, 0], "coarse")).toThrow();
  });

  it("allows exactly one move in flight", () => {
    const m = new SessionModel();
    m.applyCreate("s", snapshot(), frames(1));
    m.beginMove();
    expect(() => m.beginMove()).toThrow(/already in flight/);
    m.applyStep(snapshot({ seq: 2, step: 1, reward: 1.5, visibility: 0.6 }), frames(2));
    expect(m.moveInFlight).toBe(false);
    expect(m.trace).toHaveLength(2);
    expect(m.trace[1]).toEqual({ step: 1, visibility: 0.6, reward: 1.5 });
  });

  it("rejects stale or reordered snapshots", () => {
    const m = new SessionModel();
    m.applyCreate("s", snapshot({ seq: 5 }), frames(5));
    m.beginMove();
    expect(() => m.applyStep(snapshot({ seq: 4 }), frames(4))).toThrow(/stale/);
  });

  it("shows the unsafe banner with the penalty and recovers via reset", () => {
    const m = new SessionModel();
    m.applyCreate("s", snapshot(), frames(1));
    m.beginMove();
    m.applyStep(snapshot({
      seq: 2, step: 0, reward: -0.04, done: true, terminated_unsafe: true,
    }), frames(2));
    expect(m.doneBanner).toContain("-0.04");
    expect(() => m.beginMove()).toThrow(/done/);
    m.applyReset(snapshot({ seq: 3, step: 0 }), frames(3));
    expect(m.done).toBe(false);
    expect(m.doneBanner).toBeNull();
    expect(m.trace).toHaveLength(1);
  });

  it("blocks malformed moves client-side", () => {
    const m = new SessionModel();
    m.applyCreate("s", snapshot(), frames(1));
    expect(() => m.moveVector([NaN, 0, 0, 0, 0], "coarse")).toThrow();
    expect(() => m.moveVector([Infinity, 0, 0, 0, 0], "fine")).toThrow();
  });

  it("restores traces from history records", () => {
    const m = new SessionModel();
    const records = [
      snapshot({ seq: 1, step: 0 }),
      snapshot({ seq: 2, step: 1, visibility: 0.7, reward: 2.0 }),
      snapshot({ seq: 3, step: 2, visibility: 0.9, reward: 3.2 }),
    ];
    m.restoreHistory(records);
    expect(m.trace.map((t) => t.visibility)).toEqual([0.42, 0.7, 0.9]);
    expect(m.step).toBe(2);
    expect(m.visibility).toBe(0.9);
  });
});
