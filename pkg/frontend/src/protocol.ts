// Wire schema of the streaming service: JSON objects, one per line on the
// TCP transport, one per text frame over WebSocket.

export type IntentName =
  | "turn_left"
  | "turn_right"
  | "speed_up"
  | "stop"
  | "neutral";

export const INTENTS: IntentName[] = [
  "turn_left",
  "turn_right",
  "speed_up",
  "stop",
  "neutral",
];

export interface FrameMsg {
  type: "frame";
  t: number; // milliseconds, stream time
  grid: number[][]; // rows x cols pressures in [0, 1]
}

export interface ModeMsg {
  type: "mode";
  mode: "live" | "capture";
}

export interface EndSampleMsg {
  type: "end_sample";
  label: IntentName;
}

export type ClientMsg =
  | FrameMsg
  | ModeMsg
  | EndSampleMsg
  | { type: "train" }
  | { type: "export" }
  | { type: "reset_pose" };

export interface HelloMsg {
  type: "hello";
  mode: string;
  shape: [number, number];
  labels: IntentName[];
  window_frames: number;
  buffer_len: number;
}

export interface IntentMsg {
  type: "intent";
  t: number;
  label: IntentName;
  buffer: IntentName[];
}

export interface CommandMsg {
  type: "command";
  t: number;
  intent: IntentName;
  linear_mps: number;
  angular_rps: number;
}

export interface PoseMsg {
  type: "pose";
  x: number;
  y: number;
  heading: number;
}

export interface SampleMsg {
  type: "sample";
  label: IntentName;
  count: number;
  counts: Record<string, number>;
}

export interface ReadyMsg {
  type: "ready";
  n_train: number;
  classes: IntentName[];
}

export interface DatasetMsg {
  type: "dataset";
  jsonl: string;
  counts: Record<string, number>;
}

export type ServerMsg =
  | HelloMsg
  | IntentMsg
  | CommandMsg
  | PoseMsg
  | SampleMsg
  | ReadyMsg
  | DatasetMsg
  | { type: "mode"; mode: string }
  | { type: "progress"; stage: string }
  | { type: "error"; error: string };

export function encode(msg: ClientMsg): string {
  return JSON.stringify(msg) + "\n";
}

/** Split a growing NDJSON buffer into complete messages plus the remainder. */
export function decodeLines(buffer: string): { msgs: ServerMsg[]; rest: string } {
  const msgs: ServerMsg[] = [];
  let start = 0;
  for (;;) {
    const nl = buffer.indexOf("\n", start);
    if (nl < 0) break;
    const line = buffer.slice(start, nl).trim();
    start = nl + 1;
    if (line.length > 0) msgs.push(JSON.parse(line) as ServerMsg);
  }
  return { msgs, rest: buffer.slice(start) };
}
