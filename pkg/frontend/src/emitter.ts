// Fixed-rate frame emitter.  Frames leave on a 45 Hz timer regardless of
// pointer event rate; when the sink is backpressured the queue drops its
// oldest entries first (stale tactile frames are worthless).

export interface EmitterOptions {
  rateHz?: number;
  maxQueue?: number;
  now?: () => number; // injectable clock for tests
}

export class FrameEmitter {
  readonly rateHz: number;
  readonly maxQueue: number;
  private readonly now: () => number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private queue: Array<{ t: number; grid: number[][] }> = [];
  private dropped = 0;
  private sent = 0;

  constructor(
    private readonly compose: () => number[][],
    private readonly sink: (t: number, grid: number[][]) => boolean,
    opts: EmitterOptions = {},
  ) {
    this.rateHz = opts.rateHz ?? 45;
    this.maxQueue = opts.maxQueue ?? 90; // ~2 s of frames
    this.now = opts.now ?? (() => performance.now());
  }

  get running(): boolean {
    return this.timer !== null;
  }

  get stats(): { sent: number; dropped: number; queued: number } {
    return { sent: this.sent, dropped: this.dropped, queued: this.queue.length };
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), 1000 / this.rateHz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One timer period: compose a frame, then flush as much as the sink takes. */
  tick(): void {
    this.queue.push({ t: this.now(), grid: this.compose() });
    while (this.queue.length > this.maxQueue) {
      this.queue.shift();
      this.dropped++;
    }
    while (this.queue.length > 0) {
      const head = this.queue[0];
      if (!this.sink(head.t, head.grid)) break; // backpressure: retry next tick
      this.queue.shift();
      this.sent++;
    }
  }
}
