/**
 * Mirrored game state for rendering.
 *
 * The view only ever holds server-acknowledged state plus an optimistic
 * local echo of the player's own drag; any server snapshot or item
 * update for an echoed item wins and clears the echo.
 */

import {
  BackgroundMsg,
  Envelope,
  ItemState,
  StrokeMsg,
  itemStateSchema,
  strokeSchema,
  backgroundSchema,
} from "./envelopes.js";
import { GatewayClient, ConnectionStatus } from "./client.js";

export interface ViewItem {
  id: string;
  kind: string;
  x: number;
  y: number;
  w: number;
  h: number;
  z: number;
  echoed: boolean;
}

export interface ViewStroke {
  colour: number;
  width: number;
  points: Array<[number, number]>;
}

export interface SnapshotPayload {
  items: Array<{ id: string; kind: string; x: number; y: number; w: number; h: number; z: number }>;
  strokes: Array<{ colour: number; width: number; points: Array<[number, number]> }>;
  background: string;
  mode: string;
  session?: { session_id: string; condition: string; stage: string } | null;
}

export class UiGameView {
  items = new Map<string, ViewItem>();
  strokes: ViewStroke[] = [];
  background: Uint8Array | null = null;
  backgroundSize: [number, number] = [0, 0];
  mode = "tutorial";
  connection: ConnectionStatus = "connected";
  selectedTool: { tool: "drag" | "draw"; colour: number } = { tool: "drag", colour: 7 };

  /** Wire the view to a client's streamed topics. */
  attach(client: GatewayClient): void {
    this.connection = client.status;
    client.onStatus((s) => (this.connection = s));
    client.onTopic("game/items", (env) => this.applyItemState(itemStateSchema.parse(env.payload)));
    client.onTopic("game/strokes", (env) => this.applyStroke(strokeSchema.parse(env.payload)));
    client.onTopic("game/background", (env) =>
      this.applyBackground(backgroundSchema.parse(env.payload))
    );
    client.onTopic("game/reset", () => this.applyReset());
    client.onTopic("session/stage", (env) => {
      const stage = (env.payload as { stage?: string }).stage;
      this.mode = stage === "freeplay" ? "freeplay" : "tutorial";
    });
  }

  /** Authoritative full state; always wins over any local echo. */
  applySnapshot(snap: SnapshotPayload): void {
    this.items.clear();
    for (const item of snap.items) {
      this.items.set(item.id, { ...item, echoed: false });
    }
    this.strokes = snap.strokes.map((s) => ({
      colour: s.colour,
      width: s.width,
      points: s.points.map(([x, y]) => [x, y] as [number, number]),
    }));
    this.background = decodeBase64(snap.background);
    this.mode = snap.mode;
  }

  applyItemState(msg: ItemState): void {
    // server-acknowledged: replaces any optimistic echo for this item
    this.items.set(msg.item_id, {
      id: msg.item_id,
      kind: msg.kind,
      x: msg.x,
      y: msg.y,
      w: msg.w,
      h: msg.h,
      z: msg.z,
      echoed: false,
    });
  }

  applyStroke(msg: StrokeMsg): void {
    this.strokes.push({
      colour: msg.colour,
      width: msg.width,
      points: msg.points.map(([x, y]) => [x, y] as [number, number]),
    });
  }

  applyBackground(msg: BackgroundMsg): void {
    this.background = decodeBase64(msg.cells);
    this.backgroundSize = [msg.width, msg.height];
  }

  applyReset(): void {
    this.strokes = [];
    // the reset snapshot that follows repopulates items and background
  }

  /** Optimistic echo of the local player's drag (reconciled by the server). */
  echoItemMove(itemId: string, x: number, y: number): void {
    const item = this.items.get(itemId);
    if (item) {
      item.x = x;
      item.y = y;
      item.echoed = true;
    }
  }

  itemAt(x: number, y: number, margin = 0.005): ViewItem | null {
    let best: ViewItem | null = null;
    for (const item of this.items.values()) {
      if (
        Math.abs(x - item.x) <= item.w / 2 + margin &&
        Math.abs(y - item.y) <= item.h / 2 + margin
      ) {
        if (best === null || item.z > best.z || (item.z === best.z && item.id < best.id)) {
          best = item;
        }
      }
    }
    return best;
  }

  get hasEcho(): boolean {
    for (const item of this.items.values()) if (item.echoed) return true;
    return false;
  }
}

function decodeBase64(data: string): Uint8Array {
  if (typeof Buffer !== "undefined") {
    return new Uint8Array(Buffer.from(data, "base64"));
  }
  const raw = atob(data);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

export function snapshotFromEnvelope(env: Envelope): SnapshotPayload {
  return env.payload as unknown as SnapshotPayload;
}
