// Guided capture workflow: prompt per intent, record fixed-length samples,
// then hand off to training.  The machine is transport-free; callers send
// the frames and forward the end_sample/train actions it returns.

import type { IntentName } from "./protocol.js";
import { INTENTS } from "./protocol.js";

export type CaptureAction =
  | { kind: "prompt"; label: IntentName; sample: number; ofSamples: number }
  | { kind: "end_sample"; label: IntentName }
  | { kind: "all_done" };

export interface CaptureProgress {
  state: "idle" | "prompting" | "recording" | "done";
  label: IntentName | null;
  sample: number; // 1-based within the current label
  ofSamples: number;
  framesLeft: number;
  captured: number; // samples banked so far
}

export class CaptureWorkflow {
  private labelIdx = 0;
  private sampleIdx = 0; // completed samples for the current label
  private framesLeft = 0;
  private state: CaptureProgress["state"] = "idle";
  private banked = 0;

  constructor(
    readonly samplesPerClass: number,
    readonly framesPerSample: number,
    readonly labels: IntentName[] = INTENTS,
  ) {
    if (samplesPerClass < 1 || framesPerSample < 1 || labels.length === 0) {
      throw new Error("capture workflow needs positive sizes");
    }
  }

  get currentLabel(): IntentName | null {
    return this.state === "idle" || this.state === "done"
      ? null
      : this.labels[this.labelIdx];
  }

  progress(): CaptureProgress {
    return {
      state: this.state,
      label: this.currentLabel,
      sample: Math.min(this.sampleIdx + 1, this.samplesPerClass),
      ofSamples: this.samplesPerClass,
      framesLeft: this.framesLeft,
      captured: this.banked,
    };
  }

  /** Enter the workflow (or restart it). */
  start(): CaptureAction {
    this.labelIdx = 0;
    this.sampleIdx = 0;
    this.banked = 0;
    this.framesLeft = 0;
    this.state = "prompting";
    return this.promptAction();
  }

  private promptAction(): CaptureAction {
    return {
      kind: "prompt",
      label: this.labels[this.labelIdx],
      sample: this.sampleIdx + 1,
      ofSamples: this.samplesPerClass,
    };
  }

  /** Arm recording of the prompted sample. */
  beginSample(): void {
    if (this.state !== "prompting") throw new Error(`cannot record in ${this.state}`);
    this.state = "recording";
    this.framesLeft = this.framesPerSample;
  }

  /** Abort the in-flight sample; banked samples are untouched. */
  cancelSample(): void {
    if (this.state === "recording") {
      this.framesLeft = 0;
      this.state = "prompting";
    }
  }

  /**
   * Account one streamed frame; returns the actions due after it (an
   * end_sample once the sample is full, plus all_done after the last one).
   */
  onFrame(): CaptureAction[] {
    if (this.state !== "recording") return [];
    this.framesLeft--;
    if (this.framesLeft > 0) return [];
    const label = this.labels[this.labelIdx];
    const actions: CaptureAction[] = [{ kind: "end_sample", label }];
    this.banked++;
    this.sampleIdx++;
    if (this.sampleIdx >= this.samplesPerClass) {
      this.sampleIdx = 0;
      this.labelIdx++;
    }
    if (this.labelIdx >= this.labels.length) {
      this.state = "done";
      actions.push({ kind: "all_done" });
    } else {
      this.state = "prompting";
      actions.push(this.promptAction());
    }
    return actions;
  }
}
