/** Wire types and message builders for the serve WebSocket protocol.
 *
 * Builders are the only way the UI constructs outbound messages, and the
 * test suite validates every builder output against the shared schema file
 * (protocol/serve_schema.json), so the client cannot drift from the server.
 */

export interface DronePose {
  x: number;
  y: number;
  z: number;
  yaw: number;
}

export interface HumanPose {
  x: number;
  y: number;
  heading: number;
}

export type BehaviorStateName = "home" | "idle" | "await";

export interface Snapshot {
  type: "snapshot";
  t: number;
  drone: DronePose;
  human: HumanPose;
  state: BehaviorStateName;
  tau_est: number | null;
  D_est: number | null;
  metrics: Record<string, unknown>;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type Inbound = Snapshot | ErrorMessage;

export interface UserMove {
  type: "user_move";
  vx: number;
  vy: number;
  vheading: number;
}

export interface Gesture {
  type: "gesture";
  kind: "summon" | "relieve";
}

export type MoveKind = "z_absolute" | "z_relative" | "xy_relative";

export interface ApiMove {
  type: "api";
  move: { kind: MoveKind; z?: number; dx?: number; dy?: number };
}

export interface SetValue {
  type: "set";
  path: string;
  value: number | boolean;
}

export interface PauseResume {
  type: "pause" | "resume";
}

export type Outbound = UserMove | Gesture | ApiMove | SetValue | PauseResume;

export function userMove(vx: number, vy: number, vheading: number): UserMove {
  return { type: "user_move", vx, vy, vheading };
}

export function gesture(kind: "summon" | "relieve"): Gesture {
  return { type: "gesture", kind };
}

export function apiMove(move: ApiMove["move"]): ApiMove {
  return { type: "api", move };
}

export function setValue(path: string, value: number | boolean): SetValue {
  return { type: "set", path, value };
}

export function pause(): PauseResume {
  return { type: "pause" };
}

export function resume(): PauseResume {
  return { type: "resume" };
}

export function parseInbound(raw: string): Inbound | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as { type?: unknown };
  if (msg.type === "snapshot" || msg.type === "error") return doc as Inbound;
  return null;
}
