// SessionClient: request/reply pairing over the session WebSocket.
//
// The server answers strictly in order on a connection; create/reset/step
// replies are always followed by a frame-batch carrying the observation for
// the new state, so each pending request waits for its reply pair. Frame
// batches are matched to their reply by sequence number; a mismatch fails
// the request rather than silently reordering frames.

import {
  ActionUnits,
  ErrorPayload,
  FrameBatch,
  parseServerMessage,
  RequestType,
  ServerMessage,
  Snapshot,
} from "./protocol.js";

export interface WsLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close" | "error", cb: () => void): void;
  addEventListener(type: "message", cb: (event: { data: unknown }) => void): void;
}

export class ProtocolFailure extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export interface StepResultView {
  session: string | null;
  snapshot: Snapshot;
  frames: FrameBatch;
}

interface Pending {
  expect: RequestType;
  wantFrames: boolean;
  reply?: ServerMessage;
  resolve: (value: StepResultView | Snapshot[]) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  private ws: WsLike | null = null;
  private pending: Pending[] = [];
  sessionId: string | null = null;
  onClose: (() => void) | null = null;

  constructor(private socketFactory: () => WsLike) {}

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      let settled = false;
      try {
        this.ws = this.socketFactory();
      } catch (err) {
        reject(err instanceof Error ? err : new Error(String(err)));
        return;
      }
      this.ws.addEventListener("open", () => {
        settled = true;
        resolve();
      });
      this.ws.addEventListener("error", () => {
        if (!settled) {
          settled = true;
          reject(new Error("connection failed"));
        }
      });
      this.ws.addEventListener("close", () => {
        const leftover = this.pending.splice(0);
        for (const p of leftover) p.reject(new Error("connection closed"));
        if (!settled) {
          settled = true;
          reject(new Error("connection closed"));
        }
        this.onClose?.();
      });
      this.ws.addEventListener("message", (event) => {
        this.handleMessage(String(event.data));
      });
    });
  }

  close(): void {
    this.ws?.close();
  }

  private handleMessage(raw: string): void {
    const message = parseServerMessage(raw);
    const head = this.pending[0];
    if (!head) return; // unsolicited message: nothing to pair with

    if (message.type === "error") {
      this.pending.shift();
      const payload = message.payload as unknown as ErrorPayload;
      head.reject(new ProtocolFailure(payload.code, payload.message));
      return;
    }
    if (message.type === head.expect && !head.reply) {
      if (head.expect === "history") {
        this.pending.shift();
        head.resolve((message.payload as { records: Snapshot[] }).records);
        return;
      }
      head.reply = message;
      if (!head.wantFrames) {
        this.pending.shift();
        head.resolve({
          session: message.session,
          snapshot: message.payload as unknown as Snapshot,
          frames: { seq: -1, step: -1, frames_png: [], totals: [], shape: [] },
        });
      }
      return;
    }
    if (message.type === "frame-batch" && head.reply) {
      this.pending.shift();
      const snapshot = head.reply.payload as unknown as Snapshot;
      const frames = message.payload as unknown as FrameBatch;
      if (frames.seq !== snapshot.seq) {
        head.reject(new ProtocolFailure(
          "seq_mismatch",
          `frame batch seq ${frames.seq} does not match state seq ${snapshot.seq}`,
        ));
        return;
      }
      head.resolve({ session: head.reply.session, snapshot, frames });
      return;
    }
    this.pending.shift();
    head.reject(new ProtocolFailure("unexpected_reply", `unexpected ${message.type}`));
  }

  private request(
    type: RequestType,
    payload: Record<string, unknown>,
    wantFrames = true,
  ): Promise<StepResultView | Snapshot[]> {
    if (!this.ws) return Promise.reject(new Error("not connected"));
    return new Promise((resolve, reject) => {
      this.pending.push({ expect: type, wantFrames, resolve, reject });
      this.ws!.send(JSON.stringify({ type, session: this.sessionId, payload }));
    });
  }

  async create(options: { seed?: number; randomization?: "on" | "off" } = {}):
      Promise<StepResultView> {
    const result = (await this.request("create", options)) as StepResultView;
    this.sessionId = result.session;
    return result;
  }

  async reset(seed?: number): Promise<StepResultView> {
    const payload = seed === undefined ? {} : { seed };
    return (await this.request("reset", payload)) as StepResultView;
  }

  async step(action: number[], units: ActionUnits = "physical"): Promise<StepResultView> {
    return (await this.request("step", { action, units })) as StepResultView;
  }

  async history(): Promise<Snapshot[]> {
    return (await this.request("history", {}, false)) as Snapshot[];
  }
}
