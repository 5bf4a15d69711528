// Scripted console session against the real Python service: create a
// deterministic session, negate the initial misalignment, and check the
// displayed trace matches the server's reports field-for-field.

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { SessionClient, ProtocolFailure } from "../src/client.js";
import { SessionModel } from "../src/model.js";
import { Snapshot } from "../src/protocol.js";

const PORT = 8731;
let server: ChildProcess;

async function waitForServer(port: number, tries = 120): Promise<void> {
  for (let i = 0; i < tries; i++) {
    try {
      const res = await fetch(`http://127.0.0.1:${port}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  throw new Error("service did not come up");
}

function makeClient(): SessionClient {
  return new SessionClient(
    () => new WebSocket(`ws://127.0.0.1:${PORT}/ws`) as never,
  );
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "mzi_align.cli", "serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForServer(PORT);
}, 90_000);

afterAll(() => {
  server?.kill();
});

describe("console round trip", () => {
  it("aligns a deterministic session and mirrors server values exactly", async () => {
    const client = makeClient();
    await client.connect();
    const model = new SessionModel();

    const created = await client.create({ seed: 42, randomization: "off" });
    model.applyCreate(created.session, created.snapshot, created.frames);
    expect(model.sessionId).toBeTruthy();
    expect(model.frames).toHaveLength(16);
    expect(created.frames.shape).toEqual([16, 64, 64]);

    const serverReports: Snapshot[] = [];
    // negate the misalignment read from the control readouts, then settle
    for (let move = 0; move < 3; move++) {
      const deltas = model.controls.map((v, i) =>
        Math.min(Math.max(-v, -model.bounds[i]), model.bounds[i]));
      model.beginMove();
      const { snapshot, frames } = await client.step(deltas, "physical");
      model.applyStep(snapshot, frames);
      serverReports.push(snapshot);
      if (model.controls.every((v) => v === 0)) break;
    }

    // the displayed trace ends above 0.99 and equals the server's values
    const displayed = model.trace.slice(1);
    expect(displayed[displayed.length - 1].visibility).toBeGreaterThan(0.99);
    expect(displayed.length).toBe(serverReports.length);
    for (let i = 0; i < serverReports.length; i++) {
      expect(displayed[i].visibility).toBe(serverReports[i].visibility);
      expect(displayed[i].reward).toBe(serverReports[i].reward);
      expect(displayed[i].step).toBe(serverReports[i].step);
    }
    // frame animation: 16 frames, sequence number verified by the client
    expect(model.frames).toHaveLength(16);
    expect(model.frameSeq).toBe(serverReports[serverReports.length - 1].seq);

    // server-side history agrees with the local trace field-for-field
    const history = await client.history();
    const historySteps = history.filter((r) => r.reward !== null);
    expect(historySteps.length).toBe(displayed.length);
    for (let i = 0; i < displayed.length; i++) {
      expect(historySteps[i].visibility).toBe(displayed[i].visibility);
      expect(historySteps[i].reward).toBe(displayed[i].reward);
    }
    client.close();
  }, 60_000);

  it("shows the unsafe-move penalty and recovers through reset", async () => {
    const client = makeClient();
    await client.connect();
    const model = new SessionModel();
    const created = await client.create({ seed: 7, randomization: "off" });
    model.applyCreate(created.session, created.snapshot, created.frames);

    // push the first control past its bound: a full-range move away from zero
    const direction = model.controls[0] >= 0 ? 1 : -1;
    const deltas = [direction * model.bounds[0], 0, 0, 0, 0];
    model.beginMove();
    const { snapshot, frames } = await client.step(deltas, "physical");
    model.applyStep(snapshot, frames);

    expect(model.done).toBe(true);
    expect(model.terminatedUnsafe).toBe(true);
    expect(model.lastReward).toBe(-0.04);
    expect(model.doneBanner).toContain("-0.04");
    expect(() => model.beginMove()).toThrow(/done/);

    const reset = await client.reset(7);
    model.applyReset(reset.snapshot, reset.frames);
    expect(model.done).toBe(false);
    expect(model.step).toBe(0);
    expect(model.trace).toHaveLength(1);
    client.close();
  }, 60_000);

  it("surfaces protocol errors verbatim without losing the session", async () => {
    const client = makeClient();
    await client.connect();
    const model = new SessionModel();
    const created = await client.create({ seed: 3, randomization: "off" });
    model.applyCreate(created.session, created.snapshot, created.frames);

    model.beginMove();
    let failure: ProtocolFailure | null = null;
    try {
      await client.step([1, 2, 3], "physical");
    } catch (err) {
      failure = err as ProtocolFailure;
      model.failMove(`${failure.code}: ${failure.message}`);
    }
    expect(failure?.code).toBe("bad_action");
    expect(model.lastError).toContain("bad_action");

    // session still usable after the rejected move
    model.beginMove();
    const { snapshot, frames } = await client.step([0, 0, 0, 0, 0], "physical");
    model.applyStep(snapshot, frames);
    expect(model.step).toBe(1);
    expect(model.visibility).toBe(created.snapshot.visibility);
    client.close();
  }, 60_000);

  it("reconnects and restores history for an existing session", async () => {
    const c1 = makeClient();
    await c1.connect();
    const m1 = new SessionModel();
    const created = await c1.create({ seed: 11, randomization: "off" });
    m1.applyCreate(created.session, created.snapshot, created.frames);
    m1.beginMove();
    const step1 = await c1.step([0, 0, 0, 0, 0.1], "physical");
    m1.applyStep(step1.snapshot, step1.frames);
    c1.close();

    const c2 = makeClient();
    await c2.connect();
    c2.sessionId = m1.sessionId;
    const m2 = new SessionModel();
    m2.restoreHistory(await c2.history());
    expect(m2.step).toBe(m1.step);
    expect(m2.visibility).toBe(m1.visibility);
    expect(m2.trace.length).toBe(m1.trace.length);
    c2.close();
  }, 60_000);
});
