/** Shared browser bootstrap: connect the /ws bridge and expose the client. */

import { GatewayClient } from "../client.js";
import { WebSocketTransport } from "../transport.js";

export function connectGateway(): Promise<GatewayClient> {
  const url = `ws://${location.host}/ws`;
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.addEventListener("open", () => resolve(new GatewayClient(new WebSocketTransport(ws))));
    ws.addEventListener("error", () => reject(new Error(`cannot reach ${url}`)));
  });
}

export function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function query(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

/** requestAnimationFrame render loop. */
export function renderLoop(draw: () => void): void {
  const frame = () => {
    draw();
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}
