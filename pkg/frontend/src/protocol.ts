// Wire types for the alignment session protocol: JSON text frames shaped
// {type, session, payload} over a single WebSocket.

export type RequestType = "create" | "reset" | "step" | "history";
export type ReplyType = RequestType | "frame-batch" | "error";

export interface ServerMessage {
  type: ReplyType;
  session: string | null;
  payload: Record<string, unknown>;
}

export interface Snapshot {
  seq: number;
  step: number;
  control_state: number[];
  control_bounds: number[];
  visibility: number;
  reward: number | null;
  done: boolean;
  terminated_unsafe: boolean;
  episode_radius: number;
  wall_time: number;
  action?: number[];
}

export interface FrameBatch {
  seq: number;
  step: number;
  frames_png: string[];
  totals: number[];
  shape: number[];
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export type ActionUnits = "raw" | "physical";

export interface StepRequestPayload {
  action: number[];
  units: ActionUnits;
}

export function parseServerMessage(raw: string): ServerMessage {
  const data = JSON.parse(raw);
  if (typeof data !== "object" || data === null || typeof data.type !== "string") {
    throw new Error("malformed server message");
  }
  return data as ServerMessage;
}
