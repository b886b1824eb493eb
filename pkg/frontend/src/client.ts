/**
 * Gateway client shared by every UI surface.
 *
 * One socket per surface. Control requests are answered in order by the
 * server, so replies correlate FIFO; streamed topic envelopes dispatch
 * to per-topic handlers. All outbound payloads are schema-validated
 * before they reach the wire.
 */

import {
  decodeEnvelope,
  encodeEnvelope,
  Envelope,
  validateOutbound,
} from "./envelopes.js";
import { Transport } from "./transport.js";

export type ConnectionStatus = "connected" | "disconnected";

export class GatewayError extends Error {
  constructor(
    public verb: string,
    public code: string,
    public detail: string
  ) {
    super(`${verb}: ${code}: ${detail}`);
  }
}

interface Pending {
  resolve: (env: Envelope) => void;
  reject: (err: Error) => void;
}

export class GatewayClient {
  status: ConnectionStatus = "connected";
  private pending: Pending[] = [];
  private topicCbs = new Map<string, Array<(env: Envelope) => void>>();
  private statusCbs: Array<(s: ConnectionStatus) => void> = [];

  constructor(private transport: Transport) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => this.setStatus("disconnected"));
  }

  onStatus(cb: (s: ConnectionStatus) => void): void {
    this.statusCbs.push(cb);
  }

  onTopic(topic: string, cb: (env: Envelope) => void): void {
    const list = this.topicCbs.get(topic) ?? [];
    list.push(cb);
    this.topicCbs.set(topic, list);
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status === status) return;
    this.status = status;
    this.statusCbs.forEach((cb) => cb(status));
    if (status === "disconnected") {
      const err = new Error("gateway disconnected");
      this.pending.splice(0).forEach((p) => p.reject(err));
    }
  }

  private handleLine(line: string): void {
    let env: Envelope;
    try {
      env = decodeEnvelope(line);
    } catch {
      return; // tolerate garbage on the wire
    }
    if (env.topic.startsWith("_")) {
      const pending = this.pending.shift();
      if (pending) pending.resolve(env);
      return;
    }
    this.topicCbs.get(env.topic)?.forEach((cb) => cb(env));
  }

  /** Send one envelope and await the server's control reply. */
  request(topic: string, payload: Record<string, unknown> = {}): Promise<Envelope> {
    if (this.status !== "connected") {
      return Promise.reject(new Error("gateway disconnected"));
    }
    validateOutbound(topic, payload);
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.transport.send(encodeEnvelope({ topic, stamp: 0, payload }));
    });
  }

  /** request() that unwraps _ok / _err into value-or-throw. */
  async call(topic: string, payload: Record<string, unknown> = {}): Promise<Envelope> {
    const reply = await this.request(topic, payload);
    if (reply.topic === "_err") {
      const p = reply.payload as { re?: string; error?: string; detail?: string };
      throw new GatewayError(String(p.re ?? topic), String(p.error ?? "Error"), String(p.detail ?? ""));
    }
    return reply;
  }

  subscribe(topics: string[]): Promise<Envelope> {
    return this.call("_sub", { topics });
  }

  close(): void {
    this.transport.close();
    this.setStatus("disconnected");
  }
}
