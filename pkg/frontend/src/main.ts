// Playground wiring: pad -> 45 Hz emitter -> WebSocket -> readouts/arena.
// The UI holds no classification state of its own; intent, buffer, pose and
// command history are all rebuilt from server messages, so a reconnect
// restores a consistent view.

import { ArenaView } from "./arena.js";
import { CaptureWorkflow } from "./capture.js";
import { drawCylinder } from "./cylinder.js";
import { FrameEmitter } from "./emitter.js";
import { zeros } from "./grid.js";
import { PressurePad } from "./pad.js";
import { builtinPatterns, fetchPatterns, mulberry32, presetFrame } from "./presets.js";
import type { IntentName, ServerMsg } from "./protocol.js";
import { INTENTS } from "./protocol.js";
import { ServiceSocket } from "./ws.js";

const ROWS = 11;
const COLS = 5;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const padCanvas = $<HTMLCanvasElement>("pad");
const cylCanvas = $<HTMLCanvasElement>("cylinder");
const arenaCanvas = $<HTMLCanvasElement>("arena");
const banner = $<HTMLDivElement>("banner");
const intentRow = $<HTMLDivElement>("intents");
const bufferRow = $<HTMLDivElement>("buffer");
const logEl = $<HTMLUListElement>("commandlog");
const captureStatus = $<HTMLDivElement>("capture-status");
const speedEl = $<HTMLSpanElement>("speed");

const pad = new PressurePad(padCanvas, ROWS, COLS);
const arena = new ArenaView(arenaCanvas);

let patterns = builtinPatterns(ROWS, COLS);
fetchPatterns(ROWS, COLS).then((p) => (patterns = p));

// intent chips and buffer slots
const chips = new Map<IntentName, HTMLSpanElement>();
for (const name of INTENTS) {
  const chip = document.createElement("span");
  chip.className = "chip";
  chip.textContent = name.replace("_", " ");
  intentRow.appendChild(chip);
  chips.set(name, chip);
}
const slots: HTMLSpanElement[] = [];
for (let i = 0; i < 7; i++) {
  const slot = document.createElement("span");
  slot.className = "slot";
  bufferRow.appendChild(slot);
  slots.push(slot);
}
const INTENT_HUES: Record<IntentName, string> = {
  turn_left: "#3d8fe8",
  turn_right: "#b03de8",
  speed_up: "#3de86e",
  stop: "#e83d3d",
  neutral: "#777",
};

// preset / keyboard gesture overlay
let activePreset: IntentName | null = null;
const presetRng = mulberry32(7);
function overlay(): number[][] | null {
  if (activePreset === null) return null;
  return presetFrame(patterns[activePreset], presetRng);
}

// capture workflow (abbreviated count configurable in the UI)
let workflow: CaptureWorkflow | null = null;
let mode: "live" | "capture" = "live";

const socket = new ServiceSocket(
  `ws://${location.host}/ws`,
  onMessage,
  (connected) => {
    banner.textContent = connected
      ? "connected"
      : "disconnected — reconnecting…";
    banner.className = connected ? "ok" : "bad";
  },
);
socket.connect();

const emitter = new FrameEmitter(
  () => pad.compose(performance.now(), overlay()),
  (t, grid) => {
    const frame = { type: "frame" as const, t, grid };
    const sent = socket.send(frame);
    if (sent) {
      drawCylinder(cylCanvas, grid);
      if (mode === "capture" && workflow) {
        for (const action of workflow.onFrame()) {
          if (action.kind === "end_sample") {
            socket.send({ type: "end_sample", label: action.label });
          } else if (action.kind === "prompt") {
            promptUser(action.label, action.sample, action.ofSamples);
          } else if (action.kind === "all_done") {
            captureStatus.textContent = "capture complete — training…";
            socket.send({ type: "train" });
          }
        }
      }
    }
    return sent;
  },
);
emitter.start();

function promptUser(label: IntentName, sample: number, of: number): void {
  captureStatus.textContent =
    `hold “${label.replace("_", " ")}” — sample ${sample}/${of}; ` +
    "press record (or R)";
}

function onMessage(msg: ServerMsg): void {
  switch (msg.type) {
    case "hello":
      mode = msg.mode === "capture" ? "capture" : "live";
      break;
    case "intent": {
      for (const [name, chip] of chips) {
        chip.classList.toggle("active", name === msg.label);
      }
      msg.buffer.forEach((name, i) => {
        const slot = slots[slots.length - msg.buffer.length + i];
        if (slot) slot.style.background = INTENT_HUES[name];
      });
      for (let i = 0; i < slots.length - msg.buffer.length; i++) {
        slots[i].style.background = "#222";
      }
      break;
    }
    case "command": {
      speedEl.textContent = `${msg.linear_mps.toFixed(2)} m/s`;
      if (msg.intent !== "neutral") {
        const li = document.createElement("li");
        li.textContent =
          `${(msg.t / 1000).toFixed(1)}s  ${msg.intent.replace("_", " ")}  ` +
          `v=${msg.linear_mps.toFixed(2)}  w=${msg.angular_rps.toFixed(2)}`;
        logEl.prepend(li);
        while (logEl.children.length > 40) logEl.lastChild?.remove();
      }
      break;
    }
    case "pose":
      arena.render({ x: msg.x, y: msg.y, heading: msg.heading });
      break;
    case "sample":
      captureStatus.textContent = `banked ${msg.count} samples ` +
        `(${Object.entries(msg.counts).map(([k, v]) => `${k}:${v}`).join(" ")})`;
      break;
    case "progress":
      captureStatus.textContent = "training…";
      break;
    case "ready":
      mode = "live";
      workflow = null;
      captureStatus.textContent =
        `model ready (${msg.n_train} samples) — live`;
      $<HTMLInputElement>("mode-live").checked = true;
      break;
    case "dataset": {
      const blob = new Blob([msg.jsonl], { type: "application/jsonl" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "capture.jsonl";
      a.click();
      URL.revokeObjectURL(a.href);
      break;
    }
    case "error":
      banner.textContent = `server: ${msg.error}`;
      banner.className = "bad";
      break;
    default:
      break;
  }
}

// --- controls ------------------------------------------------------------

for (const name of INTENTS) {
  const btn = $<HTMLButtonElement>(`preset-${name}`);
  btn.addEventListener("pointerdown", () => (activePreset = name));
  const release = () => {
    if (activePreset === name) activePreset = null;
  };
  btn.addEventListener("pointerup", release);
  btn.addEventListener("pointerleave", release);
}

const KEYMAP: Record<string, IntentName> = {
  ArrowLeft: "turn_left",
  ArrowRight: "turn_right",
  ArrowUp: "speed_up",
  ArrowDown: "stop",
};
window.addEventListener("keydown", (ev) => {
  const name = KEYMAP[ev.key];
  if (name) {
    activePreset = name;
    ev.preventDefault();
  } else if (ev.key.toLowerCase() === "r") {
    recordSample();
  }
});
window.addEventListener("keyup", (ev) => {
  const name = KEYMAP[ev.key];
  if (name && activePreset === name) activePreset = null;
});

$<HTMLInputElement>("mode-live").addEventListener("change", () => {
  mode = "live";
  workflow = null;
  captureStatus.textContent = "";
  socket.send({ type: "mode", mode: "live" });
});
$<HTMLInputElement>("mode-capture").addEventListener("change", () => {
  mode = "capture";
  socket.send({ type: "mode", mode: "capture" });
  const per = Number($<HTMLInputElement>("per-class").value) || 40;
  workflow = new CaptureWorkflow(per, 45);
  const first = workflow.start();
  if (first.kind === "prompt") promptUser(first.label, first.sample, first.ofSamples);
});

function recordSample(): void {
  if (mode === "capture" && workflow && workflow.progress().state === "prompting") {
    workflow.beginSample();
    captureStatus.textContent =
      `recording ${workflow.currentLabel} — hold the gesture…`;
  }
}
$<HTMLButtonElement>("record").addEventListener("click", recordSample);
$<HTMLButtonElement>("cancel").addEventListener("click", () => {
  workflow?.cancelSample();
  const p = workflow?.progress();
  if (p && p.label) promptUser(p.label, p.sample, p.ofSamples);
});
$<HTMLButtonElement>("export").addEventListener("click", () =>
  socket.send({ type: "export" }),
);
$<HTMLButtonElement>("reset-pose").addEventListener("click", () => {
  arena.reset();
  socket.send({ type: "reset_pose" });
});

// initial renders
arena.render({ x: 0, y: 0, heading: 0 });
drawCylinder(cylCanvas, zeros(ROWS, COLS));
