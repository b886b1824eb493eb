/**
 * Debounced, latest-wins seek against the server-side replay. Scrubbing
 * the timeline floods request() with targets; only the most recent one
 * goes on the wire per debounce window, and stale responses (an older
 * request resolving after a newer one) are dropped via sequence check.
 */

import { GatewayClient, GatewayError } from "./client.js";
import { Envelope } from "./envelopes.js";

export interface SeekFrame {
  t: number;
  items: Array<{ id: string; kind: string; x: number; y: number; w: number; h: number; z: number }>;
  strokes: Array<{ colour: number; width: number; points: Array<[number, number]> }>;
  background: string;
  hash: string;
}

export class SeekController {
  lastFrame: SeekFrame | null = null;
  lastError: string | null = null;
  private frameCbs: Array<(frame: SeekFrame) => void> = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pendingT: number | null = null;
  private issued = 0;
  private applied = 0;

  constructor(
    private client: GatewayClient,
    private bag: string,
    private debounceMs = 120
  ) {}

  onFrame(cb: (frame: SeekFrame) => void): void {
    this.frameCbs.push(cb);
  }

  /** Ask for the state at t; rapid calls collapse to the newest target. */
  request(t: number): void {
    this.pendingT = t;
    if (this.timer !== null) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      const target = this.pendingT;
      this.pendingT = null;
      if (target !== null) void this.fire(target);
    }, this.debounceMs);
  }

  /** Immediate seek (no debounce); used for single jumps. */
  async seekNow(t: number): Promise<SeekFrame | null> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
      this.pendingT = null;
    }
    return this.fire(t);
  }

  private async fire(t: number): Promise<SeekFrame | null> {
    const seq = ++this.issued;
    let reply: Envelope;
    try {
      reply = await this.client.call("_seek", { bag: this.bag, t: Math.round(t) });
    } catch (err) {
      if (err instanceof GatewayError) {
        this.lastError = `${err.code}: ${err.detail}`;
        return null;
      }
      throw err;
    }
    if (seq <= this.applied) {
      return null; // a newer frame already rendered; drop the stale one
    }
    this.applied = seq;
    this.lastError = null;
    const frame = reply.payload as unknown as SeekFrame;
    this.lastFrame = frame;
    this.frameCbs.forEach((cb) => cb(frame));
    return frame;
  }
}
