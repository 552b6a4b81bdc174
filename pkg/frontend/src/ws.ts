// WebSocket client wrapper: auto-reconnect, connection-state callback, and
// a send() that reports backpressure instead of buffering unboundedly.

import type { ClientMsg, ServerMsg } from "./protocol.js";

const MAX_BUFFERED_BYTES = 64 * 1024;

export class ServiceSocket {
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(
    private readonly url: string,
    private readonly onMessage: (msg: ServerMsg) => void,
    private readonly onState: (connected: boolean) => void,
  ) {}

  connect(): void {
    this.closed = false;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => this.onState(true);
    ws.onmessage = (ev) => {
      for (const line of String(ev.data).split("\n")) {
        if (line.trim().length === 0) continue;
        this.onMessage(JSON.parse(line) as ServerMsg);
      }
    };
    ws.onclose = () => {
      this.onState(false);
      this.ws = null;
      if (!this.closed) setTimeout(() => this.connect(), 1000);
    };
    ws.onerror = () => ws.close();
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  /** Returns false when the message was not sent (disconnected or choked). */
  send(msg: ClientMsg): boolean {
    if (!this.connected || this.ws === null) return false;
    if (this.ws.bufferedAmount > MAX_BUFFERED_BYTES) return false;
    this.ws.send(JSON.stringify(msg));
    return true;
  }
}
